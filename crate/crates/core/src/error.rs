use alloc::string::String;

use crate::elementals::DomainError;

/// Errors raised while building tapes or running sweeps.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("a tape needs at least one independent variable")]
    NoIndependents,
    #[error("a tape needs at least one elemental node")]
    EmptyTape,
    #[error("node {node} reads operand {operand}, which is not defined before it")]
    MalformedTape { node: isize, operand: isize },
    #[error("elemental `{symbol}` takes {expected} operand(s), got {got}")]
    Arity {
        symbol: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("elemental `{symbol}` cannot take the same operand twice")]
    DuplicateOperand { symbol: &'static str },
    #[error("evaluation failed at node {node}: {source}")]
    Domain { node: isize, source: DomainError },
    #[error("{what}: expected length {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: isize, lo: isize, hi: isize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dense storage needs {required} entries, cap is {cap}")]
    ResourceCap { required: u128, cap: u128 },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("finite-difference oracle left the domain: {0}")]
    OracleDomain(alloc::boxed::Box<Error>),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
