//! Sparse Hessians by edge pushing, and Hessian-vector products.

use alloc::vec;
use alloc::vec::Vec;

use crate::elementals::{Elemental, Partials};
use crate::error::Result;
use crate::first_order::{check_direction, forward_tangent};
use crate::sparse_sym::{Entry, StorageViolation, SymSparseMat};
use crate::tape::{Tape, ValueTrace};

/// Knobs shared by the second- and third-order sweeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Verify the sweep invariants after every node and collect violations.
    pub check_invariants: bool,
}

impl SweepOptions {
    pub fn checked() -> Self {
        Self {
            check_invariants: true,
        }
    }
}

/// Which matrix an invariant violation was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    Hessian,
    TensorVec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// The lower-triangular layout (hence symmetry) is broken.
    Storage(Matrix, StorageViolation),
    /// A row at or after the node just processed still holds a nonzero.
    ZeroStructure(Matrix),
    /// `Td` has a stored entry where `W` has none.
    NotContained,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Node whose iteration had just finished (0 for end-of-sweep checks).
    pub node: isize,
    pub kind: ViolationKind,
}

/// Outcome of a checked sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub iterations: usize,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn check_matrix(&mut self, node: isize, which: Matrix, m: &SymSparseMat, from: usize) {
        if let Err(v) = m.check_invariants() {
            self.violations.push(Violation {
                node,
                kind: ViolationKind::Storage(which, v),
            });
        }
        if !m.rows_zero_from(from) {
            self.violations.push(Violation {
                node,
                kind: ViolationKind::ZeroStructure(which),
            });
        }
    }
}

/// Output of [`edge_pushing`].
#[derive(Debug, Clone, PartialEq)]
pub struct HessianResult {
    /// `D²f(x)` over the independents, indexed `1..=n`.
    pub hessian: SymSparseMat,
    pub gradient: Vec<f64>,
    /// Present when the sweep ran with [`SweepOptions::check_invariants`].
    pub report: Option<InvariantReport>,
}

/// Unordered operand pairs `{a, b}`, diagonal included.
#[inline]
pub(crate) fn operand_pairs(arity: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..arity).flat_map(move |a| (a..arity).map(move |b| (a, b)))
}

/// Pushing step: propagate the entries `{k, i}` of row `i` to the
/// predecessors of `i`.
#[inline]
pub(crate) fn push_row(m: &mut SymSparseMat, row: &[Entry], pi: usize, preds: &[u32], p: &Partials) {
    for e in row {
        let k = e.col as usize;
        let w = e.weight;
        if k < pi {
            for (a, &j) in preds.iter().enumerate() {
                let j = j as usize;
                if j == k {
                    m.add_at(k, k, 2.0 * p.d1(a) * w);
                } else {
                    m.add_at(j, k, p.d1(a) * w);
                }
            }
        } else {
            for (a, b) in operand_pairs(preds.len()) {
                m.add_at(preds[a] as usize, preds[b] as usize, p.d1(a) * p.d1(b) * w);
            }
        }
    }
}

/// Creating step: `W_{jp} += v̄_i ∂²φ_i/∂v_j∂v_p` over structurally nonzero pairs.
#[inline]
pub(crate) fn create(m: &mut SymSparseMat, op: &Elemental, preds: &[u32], p: &Partials, bar_i: f64) {
    let support = op.second_order_support();
    for (a, b) in operand_pairs(preds.len()) {
        if support[a + b] {
            m.add_at(preds[a] as usize, preds[b] as usize, bar_i * p.d2(a, b));
        }
    }
}

/// Sparse Hessian and gradient in one reverse sweep.
pub fn edge_pushing(tape: &Tape, trace: &ValueTrace) -> Result<HessianResult> {
    edge_pushing_with(tape, trace, SweepOptions::default())
}

pub fn edge_pushing_with(
    tape: &Tape,
    trace: &ValueTrace,
    opts: SweepOptions,
) -> Result<HessianResult> {
    trace.check_shape(tape)?;
    let n = tape.n();
    let values = trace.as_slice();
    let mut w = SymSparseMat::for_tape(n, tape.len());
    let mut bar = vec![0.0; tape.total_len()];
    bar[tape.total_len() - 1] = 1.0;
    let mut report = opts.check_invariants.then(InvariantReport::default);

    for t in (0..tape.len()).rev() {
        let pi = n + t;
        let (op, p, preds) = tape.op_partials(t, values)?;
        // Row i is logically zero once node i is processed, so it is released.
        let row = w.take_row(pi);
        push_row(&mut w, &row, pi, preds, &p);
        create(&mut w, &op, preds, &p, bar[pi]);
        let bi = bar[pi];
        for (a, &j) in preds.iter().enumerate() {
            bar[j as usize] += bi * p.d1(a);
        }
        if let Some(r) = report.as_mut() {
            r.iterations += 1;
            r.check_matrix(t as isize + 1, Matrix::Hessian, &w, pi);
        }
    }
    bar.truncate(n);
    Ok(HessianResult {
        hessian: w.into_independents(n),
        gradient: bar,
        report,
    })
}

/// `D²f(x)·d` without forming the Hessian: a forward tangent sweep followed
/// by a reverse sweep carrying one extra scalar per variable.
pub fn hessian_vector(tape: &Tape, trace: &ValueTrace, d: &[f64]) -> Result<Vec<f64>> {
    trace.check_shape(tape)?;
    check_direction(tape, d)?;
    let n = tape.n();
    let values = trace.as_slice();
    let dot = forward_tangent(tape, trace, d)?;
    let dot = dot.as_slice();
    let mut bar = vec![0.0; tape.total_len()];
    let mut w = vec![0.0; tape.total_len()];
    bar[tape.total_len() - 1] = 1.0;

    for t in (0..tape.len()).rev() {
        let pi = n + t;
        let (op, p, preds) = tape.op_partials(t, values)?;
        let (bi, wi) = (bar[pi], w[pi]);
        let linear = op.is_linear();
        for (a, &j) in preds.iter().enumerate() {
            let mut curvature = 0.0;
            if !linear {
                for (c, &q) in preds.iter().enumerate() {
                    curvature += p.d2(a, c) * dot[q as usize];
                }
            }
            w[j as usize] += wi * p.d1(a) + bi * curvature;
            bar[j as usize] += bi * p.d1(a);
        }
    }
    w.truncate(n);
    Ok(w)
}
