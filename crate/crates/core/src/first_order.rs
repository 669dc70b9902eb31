//! Reverse gradient and forward directional derivative.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tape::{Tape, ValueTrace};

/// Adjoints `v̄` of every variable after a reverse sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointVector {
    n: usize,
    bar: Vec<f64>,
}

/// Tangents `v̇` of every variable after a forward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    n: usize,
    dot: Vec<f64>,
}

macro_rules! indexed_vector {
    ($ty:ident, $field:ident) => {
        impl $ty {
            /// Entry at logical index `i`.
            pub fn get(&self, i: isize) -> f64 {
                self.$field[(i + self.n as isize - 1) as usize]
            }

            /// Entries for the independents `1-n..=0`.
            pub fn independents(&self) -> &[f64] {
                &self.$field[..self.n]
            }

            /// All entries by storage position.
            pub fn as_slice(&self) -> &[f64] {
                &self.$field
            }
        }
    };
}

indexed_vector!(AdjointVector, bar);
indexed_vector!(TangentVector, dot);

impl TangentVector {
    /// `Df(x)·d`, the tangent of the output.
    pub fn output(&self) -> f64 {
        *self.dot.last().expect("tangent of a sealed tape")
    }
}

pub(crate) fn check_direction(tape: &Tape, d: &[f64]) -> Result<()> {
    if d.len() != tape.n() {
        return Err(Error::Shape {
            what: "direction",
            expected: tape.n(),
            got: d.len(),
        });
    }
    Ok(())
}

/// `∇f(x)` by a reverse sweep seeded with `v̄_ℓ = 1`.
pub fn reverse_gradient(tape: &Tape, trace: &ValueTrace) -> Result<Vec<f64>> {
    Ok(reverse_adjoints(tape, trace, 1.0)?.independents().to_vec())
}

/// Reverse sweep with `v̄_ℓ = seed`, returning every adjoint.
pub fn reverse_adjoints(tape: &Tape, trace: &ValueTrace, seed: f64) -> Result<AdjointVector> {
    trace.check_shape(tape)?;
    let n = tape.n();
    let values = trace.as_slice();
    let mut bar = vec![0.0; tape.total_len()];
    bar[tape.total_len() - 1] = seed;
    for t in (0..tape.len()).rev() {
        let bi = bar[n + t];
        if bi == 0.0 {
            continue;
        }
        let (p, preds) = tape.partials(t, values)?;
        for (a, &j) in preds.iter().enumerate() {
            bar[j as usize] += bi * p.d1(a);
        }
    }
    Ok(AdjointVector { n, bar })
}

/// Tangents of every variable along `d`, visiting each node's predecessors.
pub fn forward_tangent(tape: &Tape, trace: &ValueTrace, d: &[f64]) -> Result<TangentVector> {
    trace.check_shape(tape)?;
    check_direction(tape, d)?;
    let n = tape.n();
    let values = trace.as_slice();
    let mut dot = Vec::with_capacity(tape.total_len());
    dot.extend_from_slice(d);
    for t in 0..tape.len() {
        let (p, preds) = tape.partials(t, values)?;
        let mut acc = 0.0;
        for (a, &j) in preds.iter().enumerate() {
            acc += dot[j as usize] * p.d1(a);
        }
        dot.push(acc);
    }
    debug_assert_eq!(dot.len(), n + tape.len());
    Ok(TangentVector { n, dot })
}

/// The same sweep organised by successors: for each variable `j` in order,
/// push `v̇_j ∂φ_i/∂v_j` into every successor `i`.
pub fn forward_tangent_by_successors(
    tape: &Tape,
    trace: &ValueTrace,
    d: &[f64],
) -> Result<TangentVector> {
    trace.check_shape(tape)?;
    check_direction(tape, d)?;
    let n = tape.n();
    let total = tape.total_len();
    let values = trace.as_slice();

    // successors in CSR form: (node t, operand slot a)
    let mut counts = vec![0usize; total + 1];
    for t in 0..tape.len() {
        for &j in tape.node(t).1 {
            counts[j as usize + 1] += 1;
        }
    }
    for j in 0..total {
        counts[j + 1] += counts[j];
    }
    let mut fill = counts.clone();
    let mut succ = vec![(0u32, 0u8); counts[total]];
    for t in 0..tape.len() {
        for (a, &j) in tape.node(t).1.iter().enumerate() {
            succ[fill[j as usize]] = (t as u32, a as u8);
            fill[j as usize] += 1;
        }
    }

    let mut partials = Vec::with_capacity(tape.len());
    for t in 0..tape.len() {
        partials.push(tape.partials(t, values)?.0);
    }
    let mut dot = vec![0.0; total];
    dot[..n].copy_from_slice(d);
    for j in 0..total {
        let dj = dot[j];
        for &(t, a) in &succ[counts[j]..counts[j + 1]] {
            dot[n + t as usize] += dj * partials[t as usize].d1(a as usize);
        }
    }
    Ok(TangentVector { n, dot })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elementals::Elemental;
    use crate::tape::{Instr, TapeBuilder};
    use core::f64::consts::FRAC_PI_2;

    fn toy() -> Tape {
        Tape::parse_text("1 mul -2 -1\n2 sin 0\n3 mul 2 1", 3).unwrap()
    }

    #[test]
    fn gradient_of_worked_example() {
        let t = toy();
        let tr = t.eval_forward(&[1.0, 2.0, FRAC_PI_2]).unwrap();
        let g = reverse_gradient(&t, &tr).unwrap();
        assert_eq!(g[0], 2.0);
        assert_eq!(g[1], 1.0);
        assert!(g[2].abs() < 1e-15);
    }

    #[test]
    fn gradient_of_identity() {
        let t = Tape::build(1, &[Instr { op: Elemental::Id, args: vec![0] }]).unwrap();
        let tr = t.eval_forward(&[4.0]).unwrap();
        assert_eq!(reverse_gradient(&t, &tr).unwrap(), vec![1.0]);
    }

    #[test]
    fn tangent_of_worked_example() {
        let t = toy();
        let tr = t.eval_forward(&[1.0, 2.0, FRAC_PI_2]).unwrap();
        let dot = forward_tangent(&t, &tr, &[1.0, 1.0, 1.0]).unwrap();
        assert!((dot.output() - 3.0).abs() < 1e-15);
        let zero = forward_tangent(&t, &tr, &[0.0; 3]).unwrap();
        assert!(zero.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn seeding_scales_adjoints() {
        let t = toy();
        let tr = t.eval_forward(&[0.3, -1.2, 0.7]).unwrap();
        let one = reverse_adjoints(&t, &tr, 1.0).unwrap();
        let c = reverse_adjoints(&t, &tr, 2.0).unwrap();
        for (a, b) in one.as_slice().iter().zip(c.as_slice()) {
            assert_eq!(a * 2.0, *b);
        }
    }

    #[test]
    fn successor_traversal_is_identical() {
        let mut b = TapeBuilder::new(3).unwrap();
        let [x, y, z] = [b.input(0), b.input(1), b.input(2)];
        let s = b.sin(z).unwrap();
        let m = b.mul(s, x).unwrap();
        let e = b.exp(y).unwrap();
        let q = b.div(m, e).unwrap();
        let _ = b.sub(q, x).unwrap();
        let t = b.finish().unwrap();
        let tr = t.eval_forward(&[0.1, 0.2, 0.3]).unwrap();
        let d = [0.7, -1.1, 2.0];
        assert_eq!(
            forward_tangent(&t, &tr, &d).unwrap(),
            forward_tangent_by_successors(&t, &tr, &d).unwrap()
        );
    }

    #[test]
    fn shape_errors() {
        let t = toy();
        let tr = t.eval_forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(forward_tangent(&t, &tr, &[1.0]), Err(Error::Shape { .. })));
        let other = Tape::parse_text("1 sin 0", 1).unwrap();
        let tr1 = other.eval_forward(&[1.0]).unwrap();
        assert!(matches!(reverse_gradient(&t, &tr1), Err(Error::Shape { .. })));
    }
}
