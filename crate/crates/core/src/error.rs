//! Shared error type for the whole crate.

use thiserror::Error;

/// Errors produced by derivator queries, quadrature, solving and scenario
/// handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A time query fell outside the derivator's working window.
    #[error("time {t} outside the derivator window [{start}, {end})")]
    OutOfWindow { t: f64, start: f64, end: f64 },

    /// An interval argument with `a > b`.
    #[error("invalid interval: a = {a} > b = {b}")]
    InvalidInterval { a: f64, b: f64 },

    /// A precondition on an operation argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A derivator failed construction-time validation.
    #[error("invalid derivator: {0}")]
    InvalidDerivator(String),

    /// The nonresonance condition `1 + p(t)·gap(t) > 0` failed at a jump.
    #[error("resonance: 1 + p(t)·gap(t) <= 0 at jump t = {t}")]
    Resonance { t: f64 },

    /// An integrand or field evaluation returned a non-finite value.
    #[error("non-finite value of {context} at t = {t}")]
    NonFinite { context: String, t: f64 },

    /// Adaptive quadrature did not converge within the subdivision budget.
    #[error("quadrature did not converge on [{a}, {b}) within {max_subdivisions} subdivisions")]
    QuadratureDepth {
        a: f64,
        b: f64,
        max_subdivisions: u32,
    },

    /// Expression parsing or evaluation failed.
    #[error(transparent)]
    Expr(#[from] crate::exprdsl::ExprError),

    /// A scenario configuration was rejected (schema, dimensions, unknown
    /// keys, unknown builtin ids).
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Whether this error is a configuration problem (CLI exit code 2) as
    /// opposed to a numeric failure at run time (exit code 3).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config { .. } | Error::Io(_) | Error::InvalidDerivator(_) => true,
            Error::Expr(e) => e.is_parse(),
            Error::InvalidArgument(_) | Error::InvalidInterval { .. } => true,
            Error::OutOfWindow { .. }
            | Error::Resonance { .. }
            | Error::NonFinite { .. }
            | Error::QuadratureDepth { .. } => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
