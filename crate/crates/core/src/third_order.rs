//! Third-order reverse mode: the Hessian directional derivative `D³f(x)·d`
//! on sparse symmetric storage, and a dense full-tensor sweep for small tapes.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::elementals::{Elemental, Partials};
use crate::error::{Error, Result};
use crate::first_order::{check_direction, forward_tangent};
use crate::second_order::{
    create, operand_pairs, push_row, InvariantReport, Matrix, SweepOptions, Violation,
    ViolationKind,
};
use crate::sparse_sym::{Entry, SymSparseMat};
use crate::tape::{Tape, ValueTrace};

/// Default bound on `(n+ℓ)³` for [`reverse_tensor_dense`].
pub const DEFAULT_DENSE_CAP: u128 = 10_000_000;

/// Output of [`rev_hedir`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorVecResult {
    /// `D³f(x)·d` over the independents, indexed `1..=n`.
    pub td: SymSparseMat,
    /// `D²f(x)`, indexed like `td`.
    pub hessian: SymSparseMat,
    pub gradient: Vec<f64>,
    pub report: Option<InvariantReport>,
}

pub fn rev_hedir(tape: &Tape, trace: &ValueTrace, d: &[f64]) -> Result<TensorVecResult> {
    rev_hedir_with(tape, trace, d, SweepOptions::default())
}

pub fn rev_hedir_with(
    tape: &Tape,
    trace: &ValueTrace,
    d: &[f64],
    opts: SweepOptions,
) -> Result<TensorVecResult> {
    trace.check_shape(tape)?;
    check_direction(tape, d)?;
    let n = tape.n();
    let values = trace.as_slice();
    let dot = forward_tangent(tape, trace, d)?;
    let dot = dot.as_slice();

    let mut w = SymSparseMat::for_tape(n, tape.len());
    let mut td = SymSparseMat::for_tape(n, tape.len());
    let mut bar = vec![0.0; tape.total_len()];
    bar[tape.total_len() - 1] = 1.0;
    let mut report = opts.check_invariants.then(InvariantReport::default);

    for t in (0..tape.len()).rev() {
        let pi = n + t;
        let (op, p, preds) = tape.op_partials(t, values)?;
        let td_row = td.take_row(pi);
        let w_row = w.take_row(pi);
        let bi = bar[pi];

        push_row(&mut td, &td_row, pi, preds, &p);
        if !op.is_linear() {
            connect(&mut td, &op, &w_row, pi, preds, &p, dot);
        }
        if !op.has_zero_third_order() {
            create_3d(&mut td, &op, preds, &p, dot, bi);
        }
        push_row(&mut w, &w_row, pi, preds, &p);
        create(&mut w, &op, preds, &p, bi);
        for (a, &j) in preds.iter().enumerate() {
            bar[j as usize] += bi * p.d1(a);
        }

        if let Some(r) = report.as_mut() {
            r.iterations += 1;
            let node = t as isize + 1;
            r.check_matrix(node, Matrix::Hessian, &w, pi);
            r.check_matrix(node, Matrix::TensorVec, &td, pi);
        }
    }

    let hessian = w.into_independents(n);
    let td = td.into_independents(n);
    if let Some(r) = report.as_mut() {
        if !td.structure_contained_in(&hessian) {
            r.violations.push(Violation {
                node: 0,
                kind: ViolationKind::NotContained,
            });
        }
    }
    bar.truncate(n);
    Ok(TensorVecResult {
        td,
        hessian,
        gradient: bar,
        report,
    })
}

/// 2D Connecting: the terms pairing `W` with `D²φ_i·v̇`.
fn connect(
    td: &mut SymSparseMat,
    op: &Elemental,
    w_row: &[Entry],
    pi: usize,
    preds: &[u32],
    p: &Partials,
    dot: &[f64],
) {
    let m = preds.len();
    let support = op.second_order_support();
    // s[j] = Σ_p v̇_p ∂²φ/∂v_j∂v_p
    let mut s = [0.0; 2];
    for (a, sa) in s.iter_mut().enumerate().take(m) {
        for c in 0..m {
            *sa += dot[preds[c] as usize] * p.d2(a, c);
        }
    }
    for e in w_row {
        let k = e.col as usize;
        let wik = e.weight;
        if k == pi {
            for (a, b) in operand_pairs(m) {
                let mut acc = 0.0;
                for c in 0..m {
                    acc += dot[preds[c] as usize]
                        * (p.d1(a) * p.d2(b, c) + p.d1(b) * p.d2(a, c) + p.d1(c) * p.d2(a, b));
                }
                td.add_at(preds[a] as usize, preds[b] as usize, wik * acc);
            }
            continue;
        }
        for (a, &j) in preds.iter().enumerate() {
            let j = j as usize;
            if j == k {
                td.add_at(k, k, 2.0 * wik * s[a]);
            } else {
                td.add_at(j, k, wik * s[a]);
            }
        }
        let vk = dot[k];
        for (a, b) in operand_pairs(m) {
            if support[a + b] {
                td.add_at(preds[a] as usize, preds[b] as usize, wik * vk * p.d2(a, b));
            }
        }
    }
}

/// 3D Creating: `Td_{jk} += v̄_i Σ_p ∂³φ/∂v_j∂v_k∂v_p v̇_p`.
fn create_3d(td: &mut SymSparseMat, op: &Elemental, preds: &[u32], p: &Partials, dot: &[f64], bi: f64) {
    let support = op.third_order_support();
    let m = preds.len();
    for (a, b) in operand_pairs(m) {
        if !(0..m).any(|c| support[a + b + c]) {
            continue;
        }
        let mut acc = 0.0;
        for c in 0..m {
            acc += p.d3(a, b, c) * dot[preds[c] as usize];
        }
        td.add_at(preds[a] as usize, preds[b] as usize, bi * acc);
    }
}

/// Dense symmetric 3-tensor, each entry stored once for sorted `a >= b >= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn packed(a: usize, b: usize, c: usize) -> usize {
    let (a, b, c) = sort3(a, b, c);
    a * (a + 1) * (a + 2) / 6 + b * (b + 1) / 2 + c
}

#[inline]
fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let (b, c) = if b >= c { (b, c) } else { (c, b) };
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    (a, b, c)
}

fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) * (dim + 2) / 6
}

impl DenseTensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; packed_len(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `T_{abc}` with zero-based indices in any order.
    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[packed(a, b, c)]
    }

    /// Sets all six permutations of `(a, b, c)` at once.
    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[packed(a, b, c)] = v;
    }

    fn truncated(mut self, dim: usize) -> Self {
        self.data.truncate(packed_len(dim));
        self.data.shrink_to_fit();
        self.dim = dim;
        self
    }

    /// `M_{jk} = Σ_p T_{jkp} d_p`.
    pub fn contract(&self, d: &[f64]) -> Result<DenseMatrix> {
        if d.len() != self.dim {
            return Err(Error::Shape {
                what: "direction",
                expected: self.dim,
                got: d.len(),
            });
        }
        let mut m = DenseMatrix::zeros(self.dim);
        for j in 0..self.dim {
            for k in 0..=j {
                let v: f64 = (0..self.dim).map(|p| self.get(j, k, p) * d[p]).sum();
                m.set(j, k, v);
                m.set(k, j, v);
            }
        }
        Ok(m)
    }
}

/// Free-function form of [`DenseTensor3::contract`].
pub fn contract(t: &DenseTensor3, d: &[f64]) -> Result<DenseMatrix> {
    t.contract(d)
}

/// Full `D³f(x)` by the dense reverse sweep; refuses when `(n+ℓ)³ > cap`.
pub fn reverse_tensor_dense(tape: &Tape, trace: &ValueTrace, cap: u128) -> Result<DenseTensor3> {
    trace.check_shape(tape)?;
    let size = tape.total_len();
    let required = (size as u128).pow(3);
    if required > cap {
        return Err(Error::ResourceCap { required, cap });
    }
    let n = tape.n();
    let values = trace.as_slice();
    let mut tt = DenseTensor3::zeros(size);
    let mut w = DenseMatrix::zeros(size);
    let mut bar = vec![0.0; size];
    bar[size - 1] = 1.0;
    let mut g = vec![0.0; size];
    let mut u = vec![0.0; size];
    // slot of each position within P(i), if any
    let mut slot = vec![usize::MAX; size];

    for t in (0..tape.len()).rev() {
        let pi = n + t;
        let (_, p, preds) = tape.op_partials(t, values)?;
        for (a, &j) in preds.iter().enumerate() {
            g[j as usize] = p.d1(a);
            slot[j as usize] = a;
        }
        let wii = w.get(pi, pi);
        for (c, uc) in u.iter_mut().enumerate().take(pi) {
            *uc = w.get(pi, c) + wii * g[c];
        }
        let bi = bar[pi];
        let phi2 = |x: usize, y: usize| -> f64 {
            if slot[x] == usize::MAX || slot[y] == usize::MAX {
                0.0
            } else {
                p.d2(slot[x], slot[y])
            }
        };
        let phi3 = |x: usize, y: usize, z: usize| -> f64 {
            if slot[x] == usize::MAX || slot[y] == usize::MAX || slot[z] == usize::MAX {
                0.0
            } else {
                p.d3(slot[x], slot[y], slot[z])
            }
        };

        // T ← T·(M, M, M) + W·(D²Ψ, M)·(I + S + S') + v̄ᵢ D³Ψ, visiting only
        // triples that touch P(i); entries with an index ≥ i are zero or
        // about to be cleared.
        for (q_slot, &q) in preds.iter().enumerate() {
            let q = q as usize;
            let earlier = &preds[..q_slot];
            for y in 0..pi {
                if earlier.contains(&(y as u32)) {
                    continue;
                }
                for z in 0..=y {
                    if earlier.contains(&(z as u32)) {
                        continue;
                    }
                    let (x, y, z) = (q, y, z);
                    let (gx, gy, gz) = (g[x], g[y], g[z]);
                    let mut v = tt.get(x, y, z)
                        + gx * tt.get(pi, y, z)
                        + gy * tt.get(x, pi, z)
                        + gz * tt.get(x, y, pi)
                        + gx * gy * tt.get(pi, pi, z)
                        + gx * gz * tt.get(pi, y, pi)
                        + gy * gz * tt.get(x, pi, pi)
                        + gx * gy * gz * tt.get(pi, pi, pi);
                    v += phi2(x, y) * u[z] + phi2(x, z) * u[y] + phi2(y, z) * u[x];
                    v += bi * phi3(x, y, z);
                    tt.set(x, y, z, v);
                }
            }
        }
        for y in 0..=pi {
            for z in 0..=y {
                tt.set(pi, y, z, 0.0);
            }
        }

        // W ← MᵀWM + v̄ᵢ D²Ψ
        for x in 0..pi {
            for y in 0..=x {
                let v = w.get(x, y)
                    + g[x] * w.get(pi, y)
                    + g[y] * w.get(x, pi)
                    + g[x] * g[y] * wii
                    + bi * phi2(x, y);
                w.set(x, y, v);
                w.set(y, x, v);
            }
        }
        for c in 0..size {
            w.set(pi, c, 0.0);
            w.set(c, pi, 0.0);
        }

        for &j in preds {
            let j = j as usize;
            bar[j] += bi * g[j];
        }
        for &j in preds {
            g[j as usize] = 0.0;
            slot[j as usize] = usize::MAX;
        }
    }
    Ok(tt.truncated(n))
}
