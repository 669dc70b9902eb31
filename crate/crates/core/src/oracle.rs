//! Central finite differences used as independent ground truth.

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_traits::Float;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::first_order::reverse_gradient;
use crate::second_order::edge_pushing;
use crate::tape::Tape;

/// Step rules and comparison tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub tolerance: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { tolerance: 1e-5 }
    }
}

impl FdConfig {
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::Parameter(alloc::format!(
                "tolerance must lie in (0, 1), got {tolerance}"
            )));
        }
        Ok(Self { tolerance })
    }

    /// Step for differencing values: `ε^{1/2}(1 + |x|∞)`.
    pub fn first_order_step(x: &[f64]) -> f64 {
        Float::sqrt(f64::EPSILON) * (1.0 + inf_norm(x))
    }

    /// Step for differencing derivatives: `ε^{1/3}(1 + |x|∞)`.
    pub fn higher_order_step(x: &[f64]) -> f64 {
        Float::cbrt(f64::EPSILON) * (1.0 + inf_norm(x))
    }

    pub fn accepts(&self, err: f64) -> bool {
        err <= self.tolerance
    }
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `max_i |a_i - b_i| / (1 + max(|a_i|, |b_i|))`; infinite on length mismatch.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| {
        let e = (x - y).abs() / (1.0 + x.abs().max(y.abs()));
        if e.is_nan() {
            f64::INFINITY
        } else {
            m.max(e)
        }
    })
}

fn shifted(x: &[f64], dir: &[f64], h: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, b)| a + h * b).collect()
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut e = alloc::vec![0.0; n];
    e[j] = 1.0;
    e
}

fn guard<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::OracleDomain(Box::new(e)))
}

fn check_len(tape: &Tape, v: &[f64], what: &'static str) -> Result<()> {
    if v.len() != tape.n() {
        return Err(Error::Shape {
            what,
            expected: tape.n(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Central differences of `f`.
pub fn fd_gradient(tape: &Tape, x: &[f64]) -> Result<Vec<f64>> {
    check_len(tape, x, "point")?;
    let h = FdConfig::first_order_step(x);
    let f = |p: Vec<f64>| guard(tape.eval_forward(&p)).map(|t| t.output());
    (0..tape.n())
        .map(|j| {
            let e = unit(tape.n(), j);
            Ok((f(shifted(x, &e, h))? - f(shifted(x, &e, -h))?) / (2.0 * h))
        })
        .collect()
}

/// Central differences of the reverse gradient, one column per variable.
/// Not symmetrised.
pub fn fd_hessian(tape: &Tape, x: &[f64]) -> Result<DenseMatrix> {
    check_len(tape, x, "point")?;
    let n = tape.n();
    let h = FdConfig::higher_order_step(x);
    let g = |p: Vec<f64>| guard(tape.eval_forward(&p).and_then(|t| reverse_gradient(tape, &t)));
    let mut m = DenseMatrix::zeros(n);
    for j in 0..n {
        let e = unit(n, j);
        let (gp, gm) = (g(shifted(x, &e, h))?, g(shifted(x, &e, -h))?);
        for r in 0..n {
            m.set(r, j, (gp[r] - gm[r]) / (2.0 * h));
        }
    }
    Ok(m)
}

/// `(H(x + hd) - H(x - hd)) / 2h` with `H` from [`edge_pushing`].
pub fn fd_tensor_vec(tape: &Tape, x: &[f64], d: &[f64]) -> Result<DenseMatrix> {
    check_len(tape, x, "point")?;
    check_len(tape, d, "direction")?;
    let h = FdConfig::higher_order_step(x);
    let hess = |p: Vec<f64>| {
        guard(
            tape.eval_forward(&p)
                .and_then(|t| edge_pushing(tape, &t))
                .map(|r| r.hessian.to_dense()),
        )
    };
    let (hp, hm) = (hess(shifted(x, d, h))?, hess(shifted(x, d, -h))?);
    let n = tape.n();
    let mut m = DenseMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            m.set(r, c, (hp.get(r, c) - hm.get(r, c)) / (2.0 * h));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::TapeBuilder;
    use core::f64::consts::FRAC_PI_2;

    fn toy() -> Tape {
        Tape::parse_text("1 mul -2 -1\n2 sin 0\n3 mul 2 1", 3).unwrap()
    }

    #[test]
    fn square_gradient() {
        let mut b = TapeBuilder::new(1).unwrap();
        b.square(b.input(0)).unwrap();
        let t = b.finish().unwrap();
        assert!((fd_gradient(&t, &[3.0]).unwrap()[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn worked_example() {
        let t = toy();
        let x = [1.0, 2.0, FRAC_PI_2];
        let g = fd_gradient(&t, &x).unwrap();
        assert!(rel_err(&g, &[2.0, 1.0, 0.0]) < 1e-6);
        let h = fd_hessian(&t, &x).unwrap();
        assert!(rel_err(h.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -2.0]) < 1e-5);
        assert!(h.asymmetry() < 1e-6);
        let td = fd_tensor_vec(&t, &x, &[1.0; 3]).unwrap();
        let want = [0.0, 0.0, -2.0, 0.0, 0.0, -1.0, -2.0, -1.0, -3.0];
        assert!(rel_err(td.as_slice(), &want) < 1e-5);
    }

    #[test]
    fn quadratic_constant_hessian() {
        let mut b = TapeBuilder::new(2).unwrap();
        let [x, y] = [b.input(0), b.input(1)];
        let xx = b.square(x).unwrap();
        let xy = b.mul(x, y).unwrap();
        b.add(xx, xy).unwrap();
        let t = b.finish().unwrap();
        let h = fd_hessian(&t, &[0.7, -0.2]).unwrap();
        assert!(rel_err(h.as_slice(), &[2.0, 1.0, 1.0, 0.0]) < 1e-8);
        let td = fd_tensor_vec(&t, &[0.7, -0.2], &[1.0, 1.0]).unwrap();
        assert!(td.as_slice().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn domain_failures_are_reported() {
        let t = Tape::parse_text("1 log 0", 1).unwrap();
        assert!(matches!(fd_gradient(&t, &[0.0]), Err(Error::OracleDomain(_))));
    }

    #[test]
    fn metric() {
        assert_eq!(rel_err(&[1.0], &[1.0]), 0.0);
        assert_eq!(rel_err(&[0.0], &[1.0]), 0.5);
        assert_eq!(rel_err(&[1.0], &[1.0, 2.0]), f64::INFINITY);
        assert_eq!(rel_err(&[f64::NAN], &[1.0]), f64::INFINITY);
        assert!(FdConfig::new(-1.0).is_err() && FdConfig::new(1e-5).is_ok());
    }
}
