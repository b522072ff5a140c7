//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Frequency grid is not strictly increasing, uniform, and positive.
    #[error("grid error: {0}")]
    Grid(String),

    /// A value or parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A text table could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    /// A sampled spectrum lost its conjugate symmetry.
    #[error("symmetry error: {0}")]
    Symmetry(String),

    /// An operation on a signal with zero variance.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// A noise signal is shorter than the evolution it must cover.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// A propagation step violated a numerical guarantee.
    #[error("integration error: {0}")]
    Integration(String),

    /// Requested system size exceeds what dense state vectors support.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Temperature solve target at or below the ground-state energy (beta -> +inf).
    #[error("target energy {target} is at or below the ground-state energy {ground}")]
    GroundStateEnergy { target: f64, ground: f64 },

    /// Temperature solve target at or above the spectral mean (beta < 0 branch).
    #[error("target energy {target} is at or above the spectral mean {mean}")]
    NegativeTemperature { target: f64, mean: f64 },

    /// Invalid campaign or CLI configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("linear algebra error: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
