//! Timed derivative sweeps and their CSV records.

use std::io::Write;
use std::time::Instant;

use hotad_core::{
    edge_pushing, hessian_vector, standard_point, reverse_gradient, reverse_tensor_dense, rev_hedir,
    scaled_point, ProblemSpec, Tape,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Derivative {
    Grad,
    Hess,
    Hessvec,
    Tensorvec,
    Tensor,
}

impl Derivative {
    pub fn name(self) -> &'static str {
        match self {
            Derivative::Grad => "grad",
            Derivative::Hess => "hess",
            Derivative::Hessvec => "hessvec",
            Derivative::Tensorvec => "tensorvec",
            Derivative::Tensor => "tensor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Point {
    /// x_i = i, d_i = 1
    #[default]
    Standard,
    /// x_i = i/n, d_i = 1
    Scaled,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub spec: ProblemSpec,
    pub derivatives: Vec<Derivative>,
    pub repeat: usize,
    pub point: Point,
    pub dense_cap: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub problem: String,
    pub n: usize,
    pub derivative: Derivative,
    pub nnz: usize,
    pub nnz_per_n: f64,
    pub time_ms: f64,
    pub repeats: usize,
}

pub const CSV_HEADER: [&str; 7] = [
    "problem",
    "n",
    "derivative",
    "nnz",
    "nnz_per_n",
    "time_ms",
    "repeats",
];

/// Runs one forward value sweep plus the derivative sweep; returns the nonzero count.
fn sweep(
    tape: &Tape,
    x: &[f64],
    d: &[f64],
    which: Derivative,
    cap: u128,
) -> Result<usize, CliError> {
    let trace = tape.eval_forward(x)?;
    let count = |v: &[f64]| v.iter().filter(|v| **v != 0.0).count();
    Ok(match which {
        Derivative::Grad => count(&reverse_gradient(tape, &trace)?),
        Derivative::Hess => edge_pushing(tape, &trace)?.hessian.nnz(),
        Derivative::Hessvec => count(&hessian_vector(tape, &trace, d)?),
        Derivative::Tensorvec => rev_hedir(tape, &trace, d)?.td.nnz(),
        Derivative::Tensor => {
            let t = reverse_tensor_dense(tape, &trace, cap)?;
            let n = t.dim();
            let mut nnz = 0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        nnz += usize::from(t.get(a, b, c) != 0.0);
                    }
                }
            }
            nnz
        }
    })
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, CliError> {
    if cfg.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let tape = cfg.spec.build()?;
    let n = cfg.spec.n;
    let (x, d) = match cfg.point {
        Point::Standard => standard_point(n),
        Point::Scaled => scaled_point(n),
    };
    let mut out = Vec::with_capacity(cfg.derivatives.len());
    for &which in &cfg.derivatives {
        let mut times = Vec::with_capacity(cfg.repeat);
        let mut nnz = 0;
        for _ in 0..cfg.repeat {
            let start = Instant::now();
            nnz = sweep(&tape, &x, &d, which, cfg.dense_cap)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        out.push(BenchRecord {
            problem: cfg.spec.name.clone(),
            n,
            derivative: which,
            nnz,
            nnz_per_n: nnz as f64 / n as f64,
            time_ms: median(times),
            repeats: cfg.repeat,
        });
    }
    Ok(out)
}

pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.problem.clone(),
            r.n.to_string(),
            r.derivative.name().to_string(),
            r.nnz.to_string(),
            format!("{:.4}", r.nnz_per_n),
            format!("{:.3}", r.time_ms),
            r.repeats.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
