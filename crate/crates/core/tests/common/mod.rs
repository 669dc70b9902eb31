#![allow(dead_code)]

use hotad_core::{Elemental, Tape, TapeBuilder, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random tape over `n` inputs whose values stay finite on `[-1, 1]^n`.
/// Every node draws operands from the most recent variables, and the tail
/// sums a few of them so the output depends on most of the tape.
pub fn random_tape(seed: u64, n: usize, len: usize) -> Tape {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TapeBuilder::new(n).unwrap();
    let mut vars: Vec<Var> = b.inputs();
    for _ in 0..len {
        let pick = |rng: &mut ChaCha8Rng, vars: &[Var]| {
            let window = vars.len().min(8);
            vars[vars.len() - 1 - rng.gen_range(0..window)]
        };
        let a = pick(&mut rng, &vars);
        let mut c = pick(&mut rng, &vars);
        if c == a {
            c = vars[rng.gen_range(0..vars.len())];
        }
        let v = match rng.gen_range(0..10) {
            0 => b.add(a, c),
            1 => b.sub(a, c),
            2 | 3 => b.mul(a, c),
            4 => b.sin(a),
            5 => b.cos(a),
            6 => {
                let s = b.sin(a).unwrap();
                b.exp(s)
            }
            7 => {
                let sq = b.square(c).unwrap();
                let den = b.offset(sq, 1.0).unwrap();
                b.div(a, den)
            }
            8 => {
                let s = b.sin(a).unwrap();
                b.unary(Elemental::PowInt(3), s)
            }
            _ => {
                let sq = b.square(a).unwrap();
                let pos = b.offset(sq, 0.5).unwrap();
                b.unary(if rng.gen() { Elemental::Log } else { Elemental::Sqrt }, pos)
            }
        }
        .unwrap();
        // keep magnitudes bounded
        let v = if rng.gen_range(0..3) == 0 { b.sin(v).unwrap() } else { v };
        vars.push(v);
    }
    let k = vars.len();
    let tail: Vec<Var> = (0..4).map(|i| vars[k - 1 - i * (k - 1) / 4]).collect();
    let mut tail = tail;
    tail.dedup();
    if tail.len() > 1 {
        b.sum(&tail).unwrap();
    } else {
        b.sin(tail[0]).unwrap();
    }
    b.finish().unwrap()
}

pub fn uniform(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
