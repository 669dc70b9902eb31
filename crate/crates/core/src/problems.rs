//! Scalable test functions recorded as tapes.
//!
//! Variables are numbered `x_1..x_n` in the formulas below; `x_k` is the
//! independent at logical index `k - n`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tape::{Tape, TapeBuilder, Var};
use crate::third_order::rev_hedir;

/// Sparsity class of `D³f(x)·d` over the independents (1-based `j, k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Bandwidth `b`: nonzero only where `2|j-k| + 1 <= b`.
    Band(usize),
    /// Diagonal plus the last row and column.
    Arrow,
    /// Diagonal plus the first and last rows and columns.
    Frame,
    /// No structure to check.
    Irregular,
}

impl Pattern {
    /// Whether entry `(j, k)` of an `n×n` matrix may be nonzero.
    pub fn allows(&self, j: usize, k: usize, n: usize) -> bool {
        match *self {
            Pattern::Band(b) => 2 * j.abs_diff(k) < b,
            Pattern::Arrow => j == k || j == n || k == n,
            Pattern::Frame => j == k || j == 1 || k == 1 || j == n || k == n,
            Pattern::Irregular => true,
        }
    }
}

impl core::fmt::Display for Pattern {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Pattern::Band(b) => write!(f, "B {b}"),
            Pattern::Arrow => f.write_str("arrow"),
            Pattern::Frame => f.write_str("frame"),
            Pattern::Irregular => f.write_str("irregular"),
        }
    }
}

/// Names accepted by [`ProblemSpec::new`].
pub const PROBLEMS: [&str; 8] = [
    "heavey_band",
    "cosine",
    "chainwood",
    "arwhead",
    "sinquad",
    "brybnd",
    "quadratic",
    "toy_xysinz",
];

pub const DEFAULT_BAND: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    /// Band width of `heavey_band`; ignored elsewhere.
    pub band: usize,
}

impl ProblemSpec {
    pub fn new(name: &str, n: usize) -> Result<Self> {
        Self::with_band(name, n, DEFAULT_BAND)
    }

    pub fn with_band(name: &str, n: usize, band: usize) -> Result<Self> {
        if !PROBLEMS.contains(&name) {
            return Err(Error::UnknownProblem(name.to_string()));
        }
        let spec = Self {
            name: name.to_string(),
            n,
            band,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        let bad = |why: &str| Err(Error::Parameter(format!("{}: {why}", self.name)));
        match self.name.as_str() {
            "heavey_band" if self.band == 0 => bad("band must be positive"),
            "heavey_band" if n <= self.band => bad("n must exceed band"),
            "chainwood" if n < 4 || !n.is_multiple_of(2) => bad("n must be even and at least 4"),
            "sinquad" if n < 3 => bad("n must be at least 3"),
            "toy_xysinz" if n != 3 => bad("n must be 3"),
            _ if n < 2 && self.name != "toy_xysinz" => bad("n must be at least 2"),
            _ => Ok(()),
        }
    }

    pub fn pattern(&self) -> Pattern {
        match self.name.as_str() {
            "heavey_band" => Pattern::Band(2 * self.band - 1),
            "cosine" | "quadratic" => Pattern::Band(3),
            "chainwood" => Pattern::Band(7),
            "brybnd" => Pattern::Band(13),
            "arwhead" => Pattern::Arrow,
            "sinquad" => Pattern::Frame,
            _ => Pattern::Irregular,
        }
    }

    /// Exact nonzero count of `D³f(x)·d` at generic points, where known.
    pub fn expected_td_nnz(&self) -> Option<usize> {
        let n = self.n;
        match self.name.as_str() {
            "cosine" | "arwhead" => Some(3 * n - 2),
            "quadratic" => Some(0),
            "heavey_band" => {
                // every |j-k| < band with 2 <= j, k <= n
                let (m, h) = (n - 1, self.band - 1);
                Some(m * (2 * h + 1) - h * (h + 1))
            }
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Tape> {
        make_problem(self)
    }
}

/// Records the tape of a problem.
pub fn make_problem(spec: &ProblemSpec) -> Result<Tape> {
    spec.validate()?;
    let mut b = TapeBuilder::new(spec.n)?;
    let x = b.inputs();
    match spec.name.as_str() {
        "heavey_band" => heavey_band(&mut b, &x, spec.band)?,
        "cosine" => cosine(&mut b, &x)?,
        "chainwood" => chainwood(&mut b, &x)?,
        "arwhead" => arwhead(&mut b, &x)?,
        "sinquad" => sinquad(&mut b, &x)?,
        "brybnd" => brybnd(&mut b, &x)?,
        "quadratic" => quadratic(&mut b, &x)?,
        "toy_xysinz" => toy(&mut b, &x)?,
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    b.finish()
}

/// Running total kept as a chain of additions.
struct Acc(Option<Var>);

impl Acc {
    fn push(&mut self, b: &mut TapeBuilder, v: Var) -> Result<()> {
        self.0 = Some(match self.0 {
            Some(acc) => b.add(acc, v)?,
            None => v,
        });
        Ok(())
    }
}

/// `Σ_{i=1}^{n-band} sin(Σ_{j=1}^{band} x_{i+j})`
fn heavey_band(b: &mut TapeBuilder, x: &[Var], band: usize) -> Result<()> {
    let mut acc = Acc(None);
    for i in 0..x.len() - band {
        let s = b.sum(&x[i + 1..=i + band])?;
        let term = b.sin(s)?;
        acc.push(b, term)?;
    }
    Ok(())
}

/// `Σ_{i=1}^{n-1} cos(x_i² - x_{i+1}/2)`
fn cosine(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let mut acc = Acc(None);
    for w in x.windows(2) {
        let sq = b.square(w[0])?;
        let half = b.scale(-0.5, w[1])?;
        let arg = b.add(sq, half)?;
        let term = b.cos(arg)?;
        acc.push(b, term)?;
    }
    Ok(())
}

/// `c·(v)²`
fn weighted_square(b: &mut TapeBuilder, c: f64, v: Var) -> Result<Var> {
    let sq = b.square(v)?;
    b.scale(c, sq)
}

/// `1 + Σ_{i=1}^{n/2-1} [100(x_{2i} - x_{2i-1}²)² + (1 - x_{2i-1})²
///  + 90(x_{2i+2} - x_{2i+1}²)² + (1 - x_{2i+1})²
///  + 10(x_{2i} + x_{2i+2} - 2)² + 0.1(x_{2i} - x_{2i+2})²]`
fn chainwood(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let mut acc = Acc(None);
    for i in 1..x.len() / 2 {
        let [x1, x2, x3, x4] = [x[2 * i - 2], x[2 * i - 1], x[2 * i], x[2 * i + 1]];
        let mut parts = Vec::with_capacity(6);
        for (c, lo, hi) in [(100.0, x1, x2), (90.0, x3, x4)] {
            let sq = b.square(lo)?;
            let r = b.sub(hi, sq)?;
            parts.push(weighted_square(b, c, r)?);
            let neg = b.scale(-1.0, lo)?;
            let r = b.offset(neg, 1.0)?;
            parts.push(b.square(r)?);
        }
        let s = b.add(x2, x4)?;
        let r = b.offset(s, -2.0)?;
        parts.push(weighted_square(b, 10.0, r)?);
        let r = b.sub(x2, x4)?;
        parts.push(weighted_square(b, 0.1, r)?);
        let term = b.sum(&parts)?;
        acc.push(b, term)?;
    }
    b.offset(acc.0.expect("n >= 4"), 1.0)?;
    Ok(())
}

/// `Σ_{i=1}^{n-1} [(x_i² + x_n²)² - 4x_i + 3]`
fn arwhead(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let last = *x.last().expect("n >= 2");
    let xn2 = b.square(last)?;
    let mut acc = Acc(None);
    for &xi in &x[..x.len() - 1] {
        let sq = b.square(xi)?;
        let q = b.add(sq, xn2)?;
        let q2 = b.square(q)?;
        let lin = b.scale(-4.0, xi)?;
        let lin = b.offset(lin, 3.0)?;
        let term = b.add(q2, lin)?;
        acc.push(b, term)?;
    }
    Ok(())
}

/// `(x_1 - 1)⁴ + Σ_{i=2}^{n-1} (sin(x_i - x_n) - x_1² + x_i²)² + (x_n² - x_1²)²`
fn sinquad(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let (first, last) = (x[0], *x.last().expect("n >= 3"));
    let x1sq = b.square(first)?;
    let xnsq = b.square(last)?;
    let r = b.offset(first, -1.0)?;
    let r2 = b.square(r)?;
    let mut acc = Acc(Some(b.square(r2)?));
    for &xi in &x[1..x.len() - 1] {
        let diff = b.sub(xi, last)?;
        let s = b.sin(diff)?;
        let xisq = b.square(xi)?;
        let inner = b.sub(s, x1sq)?;
        let inner = b.add(inner, xisq)?;
        let term = b.square(inner)?;
        acc.push(b, term)?;
    }
    let r = b.sub(xnsq, x1sq)?;
    let term = b.square(r)?;
    acc.push(b, term)?;
    Ok(())
}

/// `Σ_i [x_i(2 + 5x_i²) + 1 - Σ_{j∈J_i} x_j(1 + x_j)]²` with
/// `J_i = {j ≠ i : max(1, i-5) <= j <= min(n, i+1)}`
fn brybnd(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let n = x.len();
    let mut coupling = Vec::with_capacity(n);
    for &xj in x {
        let a = b.offset(xj, 1.0)?;
        coupling.push(b.mul(xj, a)?);
    }
    let mut acc = Acc(None);
    for i in 0..n {
        let sq = b.square(x[i])?;
        let c = b.scale(5.0, sq)?;
        let c = b.offset(c, 2.0)?;
        let own = b.mul(x[i], c)?;
        let own = b.offset(own, 1.0)?;
        let others: Vec<Var> = (i.saturating_sub(5)..=(i + 1).min(n - 1))
            .filter(|&j| j != i)
            .map(|j| coupling[j])
            .collect();
        let s = b.sum(&others)?;
        let r = b.sub(own, s)?;
        let term = b.square(r)?;
        acc.push(b, term)?;
    }
    Ok(())
}

/// `Σ x_i² + Σ x_i x_{i+1}`
fn quadratic(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let mut acc = Acc(None);
    for &xi in x {
        let t = b.square(xi)?;
        acc.push(b, t)?;
    }
    for w in x.windows(2) {
        let t = b.mul(w[0], w[1])?;
        acc.push(b, t)?;
    }
    Ok(())
}

/// `x·y·sin(z)`
fn toy(b: &mut TapeBuilder, x: &[Var]) -> Result<()> {
    let xy = b.mul(x[0], x[1])?;
    let s = b.sin(x[2])?;
    b.mul(s, xy)?;
    Ok(())
}

/// `x_i = i`, `d_i = 1`.
pub fn standard_point(n: usize) -> (Vec<f64>, Vec<f64>) {
    ((1..=n).map(|i| i as f64).collect(), alloc::vec![1.0; n])
}

/// `x_i = i/n`, `d_i = 1`.
pub fn scaled_point(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    ((1..=n).map(|i| i as f64 / nf).collect(), alloc::vec![1.0; n])
}

/// Nonzeros of `D³f(x)·d` and their count per variable.
pub fn density(tape: &Tape, x: &[f64], d: &[f64]) -> Result<(usize, f64)> {
    let trace = tape.eval_forward(x)?;
    let nnz = rev_hedir(tape, &trace, d)?.td.nnz();
    Ok((nnz, nnz as f64 / tape.n() as f64))
}
