//! Reverse-mode automatic differentiation up to third order.
//!
//! A [`Tape`] records a scalar function as a list of elemental operations.
//! Sweeps over the tape give the gradient ([`reverse_gradient`]), the sparse
//! Hessian ([`edge_pushing`]), Hessian-vector products ([`hessian_vector`])
//! and the Hessian directional derivative `D³f(x)·d` ([`rev_hedir`]).
//!
//! ```
//! use hotad_core::{rev_hedir, Tape};
//!
//! // f = x·y·sin(z)
//! let tape = Tape::parse_text("1 mul -2 -1\n2 sin 0\n3 mul 2 1", 3).unwrap();
//! let trace = tape.eval_forward(&[1.0, 2.0, std::f64::consts::FRAC_PI_2]).unwrap();
//! let r = rev_hedir(&tape, &trace, &[1.0, 1.0, 1.0]).unwrap();
//! assert!((r.td.get(3, 3) + 3.0).abs() < 1e-12);
//! ```

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod dense;
pub mod elementals;
pub mod error;
pub mod first_order;
pub mod oracle;
pub mod problems;
pub mod second_order;
pub mod sparse_sym;
pub mod tape;
pub mod third_order;

pub use dense::DenseMatrix;
pub use elementals::{DomainError, Elemental, Partials};
pub use error::{Error, Result};
pub use first_order::{
    forward_tangent, forward_tangent_by_successors, reverse_adjoints, reverse_gradient,
    AdjointVector, TangentVector,
};
pub use oracle::{fd_gradient, fd_hessian, fd_tensor_vec, rel_err, FdConfig};
pub use problems::{density, make_problem, standard_point, scaled_point, Pattern, ProblemSpec};
pub use second_order::{
    edge_pushing, edge_pushing_with, hessian_vector, HessianResult, InvariantReport, Matrix,
    SweepOptions, Violation, ViolationKind,
};
pub use sparse_sym::{StorageViolation, SymSparseMat};
pub use tape::{Instr, NodeRef, Tape, TapeBuilder, ValueTrace, Var};
pub use third_order::{
    contract, reverse_tensor_dense, rev_hedir, rev_hedir_with, DenseTensor3, TensorVecResult,
    DEFAULT_DENSE_CAP,
};
