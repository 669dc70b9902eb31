//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hotad_core::problems::{DEFAULT_BAND, PROBLEMS};
use hotad_core::{FdConfig, ProblemSpec};

use crate::bench::{run_bench, write_csv, BenchConfig, Derivative, Point};
use crate::check::{run_check, CheckConfig};
use crate::{dense_cap_from_env, CliError};

#[derive(Debug, Parser)]
#[command(name = "hotad", version, about = "Derivative sweeps up to third order: benchmarks and oracle checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time derivative sweeps and print one CSV row per derivative.
    Bench(BenchArgs),
    /// Compare every sweep against its oracle at seeded random points.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PROBLEMS))]
    pub problem: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: usize,
    /// Comma-separated list.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub derivative: Vec<Derivative>,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Point::Standard)]
    pub point: Point,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// A problem name or `all`.
    #[arg(long, value_parser = problem_or_all)]
    pub problem: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_BAND)]
    pub band: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for the finite-difference comparisons.
    #[arg(long, default_value_t = 1e-5, value_parser = tolerance, allow_negative_numbers = true)]
    pub tol: f64,
}

fn problem_or_all(s: &str) -> Result<String, String> {
    if s == "all" || PROBLEMS.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown problem; expected one of all, {}", PROBLEMS.join(", ")))
    }
}

fn tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    FdConfig::new(v).map(|_| v).map_err(|e| e.to_string())
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let dense_cap = dense_cap_from_env()?;
    match cli.command {
        Command::Bench(a) => {
            let cfg = BenchConfig {
                spec: ProblemSpec::with_band(&a.problem, a.n, a.band)?,
                derivatives: a.derivative,
                repeat: a.repeat,
                point: a.point,
                dense_cap,
            };
            if cfg.point == Point::Scaled {
                writeln!(err, "note: evaluating at x_i = i/n instead of x_i = i")?;
            }
            let records = run_bench(&cfg)?;
            match a.csv {
                Some(path) => write_csv(BufWriter::new(File::create(path)?), &records)?,
                None => write_csv(&mut *out, &records)?,
            }
            Ok(0)
        }
        Command::Check(a) => {
            let cfg = CheckConfig {
                problem: a.problem,
                n: a.n,
                band: a.band,
                seed: a.seed,
                fd: FdConfig::new(a.tol)?,
                dense_cap,
            };
            let report = run_check(&cfg)?;
            for line in &report.lines {
                writeln!(out, "{line}")?;
            }
            for note in &report.notes {
                writeln!(out, "{note}")?;
            }
            if report.passed() {
                writeln!(out, "all {} checks passed", report.lines.len())?;
                Ok(0)
            } else {
                for f in report.failures() {
                    writeln!(err, "check failed: {} {} point {:?}", f.problem, f.check, f.point)?;
                }
                Ok(1)
            }
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let (stdout, stderr) = (io::stdout(), io::stderr());
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
