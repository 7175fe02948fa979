//! Exact sparse polynomial algebra in (t, x1..xn).

mod monomial;
mod parse;
mod polynomial;
mod vector_field;

pub use monomial::Monomial;
pub use parse::parse_system;
pub use polynomial::{CompiledPoly, Polynomial};
pub use vector_field::{CompiledVectorField, VectorField};

pub(crate) use polynomial::{bigint_to_number, number_to_bigint};

use thiserror::Error;

/// Errors from polynomial construction, arithmetic, and parsing.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("operands disagree on variable count ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected {expected} entries, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("variable index {var} out of range (0..={nvars})")]
    VarIndexOutOfRange { var: usize, nvars: usize },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("component {component} has a nonzero constant term; the origin must be an equilibrium")]
    NonzeroConstantTerm { component: usize },
}
