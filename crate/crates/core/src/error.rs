use thiserror::Error;

/// Errors raised by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model/measure combination is not admissible.
    #[error("model error: {0}")]
    Model(String),

    /// An initial condition failed validation.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// A bracketed root search or ODE integration did not converge.
    #[error("solver error: {0}")]
    Solver(String),

    /// The oracle integration produced a negative concentration beyond
    /// the clamping tolerance.
    #[error("instability at t = {t}: concentration {value:e} at index {index} (try a smaller dt)")]
    Instability { t: f64, index: usize, value: f64 },

    /// Inputs that must agree (time grids, shapes) do not.
    #[error("usage error: {0}")]
    Usage(String),

    /// Configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
