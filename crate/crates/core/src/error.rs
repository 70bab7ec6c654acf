use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("derivative undefined at breakpoint {x}")]
    UndefinedDerivative { x: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("root solve for y = {y} did not reach tolerance {tol} (residual {residual:e})")]
    Tolerance { y: f64, tol: f64, residual: f64 },

    #[error("map is outside the smooth class: {0}")]
    ClassA(String),

    #[error("size limit exceeded: {what} = {got} (limit {limit})")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("recursion inconsistency: {0}")]
    Recursion(String),

    #[error("coefficient invariant violated: {0}")]
    Invariant(String),

    #[error("base point {base} is within {distance:e} of a singular orbit")]
    BasePoint { base: f64, distance: f64 },

    #[error("tree depth {depth} exceeds the limit {limit}")]
    Depth { depth: usize, limit: usize },

    #[error("weight is not finite at grid preimage {y}")]
    PoleOnGrid { y: f64 },

    #[error("power iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    Iteration { sweeps: usize, residual: f64 },

    #[error("no spectral gap: |l2|/l1 = {ratio}")]
    NoGap { ratio: f64 },

    #[error("transition verdict is inconsistent: {0}")]
    InconsistentVerdict(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Parse,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain { .. }
            | Error::UndefinedDerivative { .. }
            | Error::Validation(_)
            | Error::ClassA(_)
            | Error::Size { .. }
            | Error::BasePoint { .. }
            | Error::Depth { .. }
            | Error::PoleOnGrid { .. }
            | Error::InvalidParameter(_)
            | Error::Eval(_) => ErrorClass::Validation,
            Error::Tolerance { .. }
            | Error::InternalInvariant(_)
            | Error::Recursion(_)
            | Error::Invariant(_)
            | Error::Iteration { .. }
            | Error::NoGap { .. }
            | Error::InconsistentVerdict(_) => ErrorClass::Numeric,
            Error::Parse(_) => ErrorClass::Parse,
        }
    }
}
