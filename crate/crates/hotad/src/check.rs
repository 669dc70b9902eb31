//! Sweep-versus-oracle comparisons over seeded random points.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use hotad_core::problems::PROBLEMS;
use hotad_core::{
    edge_pushing, fd_gradient, fd_hessian, fd_tensor_vec, hessian_vector, rel_err,
    reverse_gradient, reverse_tensor_dense, rev_hedir_with, Error, FdConfig, ProblemSpec,
    SweepOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// Bound for comparisons between two exact sweeps.
pub const CROSS_TOL: f64 = 1e-12;

pub const POINTS: u64 = 3;

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// A problem name, or `all`.
    pub problem: String,
    pub n: usize,
    pub band: usize,
    pub seed: u64,
    pub fd: FdConfig,
    pub dense_cap: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Not run, with the reason.
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub problem: String,
    pub n: usize,
    pub point: Option<u64>,
    pub check: &'static str,
    pub err: f64,
    pub tol: f64,
    pub outcome: Outcome,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let point = self.point.map_or("-".to_string(), |p| p.to_string());
        let status = match &self.outcome {
            Outcome::Pass => "ok".to_string(),
            Outcome::Fail => "FAIL".to_string(),
            Outcome::Skipped(why) => format!("skipped ({why})"),
        };
        let measure = if self.check == "invariants" {
            format!("violations={}", self.err)
        } else {
            format!("max_rel_err={:.3e} tol={:.0e}", self.err, self.tol)
        };
        write!(
            f,
            "{:<12} n={:<6} point={point} {:<18} {measure} {status}",
            self.problem, self.n, self.check
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
    /// Extra human-readable output (worked-example values).
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.outcome != Outcome::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| l.outcome == Outcome::Fail)
    }
}

/// Uniform point and direction in `[-1, 1]^n` for check number `k`.
pub fn random_point(seed: u64, k: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k));
    let x = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (x, d)
}

struct Recorder<'a> {
    report: &'a mut CheckReport,
    problem: &'a str,
    n: usize,
    point: Option<u64>,
}

impl Recorder<'_> {
    fn compare(&mut self, check: &'static str, err: f64, tol: f64) {
        let outcome = if err <= tol { Outcome::Pass } else { Outcome::Fail };
        self.push(check, err, tol, outcome);
    }

    fn push(&mut self, check: &'static str, err: f64, tol: f64, outcome: Outcome) {
        self.report.lines.push(CheckLine {
            problem: self.problem.to_string(),
            n: self.n,
            point: self.point,
            check,
            err,
            tol,
            outcome,
        });
    }
}

fn check_problem(cfg: &CheckConfig, spec: &ProblemSpec, report: &mut CheckReport) -> Result<(), CliError> {
    let tape = spec.build()?;
    let n = spec.n;
    let tol = cfg.fd.tolerance;
    for k in 0..POINTS {
        let (x, d) = random_point(cfg.seed, k, n);
        let mut rec = Recorder { report, problem: &spec.name, n, point: Some(k) };
        let trace = tape.eval_forward(&x)?;

        let g = reverse_gradient(&tape, &trace)?;
        rec.compare("gradient_fd", rel_err(&g, &fd_gradient(&tape, &x)?), tol);

        let ep = edge_pushing(&tape, &trace)?;
        let h = ep.hessian.to_dense();
        rec.compare("hessian_fd", rel_err(h.as_slice(), fd_hessian(&tape, &x)?.as_slice()), tol);

        let hv = hessian_vector(&tape, &trace, &d)?;
        rec.compare("hessvec_cross", rel_err(&hv, &h.mul_vec(&d)), CROSS_TOL);

        let r = rev_hedir_with(&tape, &trace, &d, SweepOptions::checked())?;
        let td = r.td.to_dense();
        rec.compare("tensorvec_fd", rel_err(td.as_slice(), fd_tensor_vec(&tape, &x, &d)?.as_slice()), tol);
        match reverse_tensor_dense(&tape, &trace, cfg.dense_cap) {
            Ok(t) => rec.compare(
                "tensorvec_cross",
                rel_err(td.as_slice(), t.contract(&d)?.as_slice()),
                CROSS_TOL,
            ),
            Err(Error::ResourceCap { required, cap }) => rec.push(
                "tensorvec_cross",
                f64::NAN,
                CROSS_TOL,
                Outcome::Skipped(format!("needs cap {required}, have {cap}")),
            ),
            Err(e) => return Err(e.into()),
        }
        let violations = r.report.map_or(0, |r| r.violations.len());
        rec.compare("invariants", violations as f64, 0.0);
    }
    if spec.name == "toy_xysinz" {
        worked_example(spec, report)?;
    }
    Ok(())
}

/// The `x·y·sin(z)` values at `(1, 2, π/2)` along `d = (1, 1, 1)`.
fn worked_example(spec: &ProblemSpec, report: &mut CheckReport) -> Result<(), CliError> {
    let tape = spec.build()?;
    let trace = tape.eval_forward(&[1.0, 2.0, FRAC_PI_2])?;
    let r = rev_hedir_with(&tape, &trace, &[1.0; 3], SweepOptions::checked())?;
    let h = r.hessian.to_dense();
    let td = r.td.to_dense();
    let mut rec = Recorder { report, problem: &spec.name, n: 3, point: None };
    rec.compare("example_gradient", rel_err(&r.gradient, &[2.0, 1.0, 0.0]), CROSS_TOL);
    let want_h = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0];
    rec.compare("example_hessian", rel_err(h.as_slice(), &want_h), CROSS_TOL);
    let want_td = [0.0, 0.0, -2.0, 0.0, 0.0, -1.0, -2.0, -1.0, -3.0];
    rec.compare("example_tensorvec", rel_err(td.as_slice(), &want_td), CROSS_TOL);

    let rows = |m: &hotad_core::DenseMatrix| {
        (0..m.dim())
            .map(|r| format!("[{}]", m.row(r).iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(", ")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let grad = r.gradient.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(", ");
    report.notes.push("worked example f = x*y*sin(z) at (1, 2, pi/2), d = (1, 1, 1):".into());
    report.notes.push(format!("  gradient  ({grad})"));
    report.notes.push(format!("  hessian   [{}]", rows(&h)));
    report.notes.push(format!("  tensorvec [{}]", rows(&td)));
    Ok(())
}

/// Rounds values that are zero up to rounding error.
fn fmt_num(v: f64) -> String {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub fn run_check(cfg: &CheckConfig) -> Result<CheckReport, CliError> {
    let names: Vec<&str> = if cfg.problem == "all" {
        PROBLEMS.to_vec()
    } else {
        vec![cfg.problem.as_str()]
    };
    let mut report = CheckReport::default();
    for name in names {
        let n = if name == "toy_xysinz" && cfg.problem == "all" { 3 } else { cfg.n };
        let spec = ProblemSpec::with_band(name, n, cfg.band)?;
        check_problem(cfg, &spec, &mut report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(problem: &str, n: usize) -> CheckConfig {
        CheckConfig {
            problem: problem.into(),
            n,
            band: 20,
            seed: 1,
            fd: FdConfig::default(),
            dense_cap: hotad_core::DEFAULT_DENSE_CAP,
        }
    }

    #[test]
    fn toy_reports_worked_example() {
        let r = run_check(&cfg("toy_xysinz", 3)).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.notes.iter().any(|l| l.contains("gradient  (2, 1, 0)")), "{:?}", r.notes);
        assert!(r.notes.iter().any(|l| l.contains("[-2, -1, -3]")));
    }

    #[test]
    fn heavey_band_skips_dense_under_default_cap() {
        let r = run_check(&cfg("heavey_band", 30)).unwrap();
        assert!(r.passed());
        assert!(r.lines.iter().any(|l| matches!(l.outcome, Outcome::Skipped(_))));
    }

    #[test]
    fn points_are_seeded() {
        assert_eq!(random_point(5, 1, 4), random_point(5, 1, 4));
        assert_ne!(random_point(5, 1, 4), random_point(5, 2, 4));
        assert_ne!(random_point(5, 0, 4), random_point(6, 0, 4));
    }
}
