use thiserror::Error;

/// Errors surfaced by the library. Input problems and numerical failures are
/// kept apart so the CLI can map them to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("quadrature did not converge on [{a}, {b}] within {panels} panels")]
    QuadratureNonConvergence { a: f64, b: f64, panels: usize },
    #[error("time {0} is not on the recorded grid")]
    OffGrid(f64),
    #[error("empty window: {0}")]
    EmptyWindow(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
