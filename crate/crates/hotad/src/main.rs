fn main() {
    std::process::exit(hotad::cli::main());
}
