//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the physical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates an invariant or is missing.
    #[error("configuration error: {0}")]
    Config(String),

    /// The magnetic loss is at or beyond the maser oscillation threshold of
    /// the critically loaded cavity; the steady-state relations diverge.
    #[error("above maser oscillation threshold: eta_bar = {eta_bar} <= -2")]
    AboveMaserThreshold { eta_bar: f64 },

    /// A non-finite value appeared during integration.
    #[error("numerical error at t = {t:.9e} s: {message}")]
    Numerical { t: f64, message: String },

    /// A requested power reduction lies below the receiver's noise floor and
    /// cannot be inverted to a mode temperature.
    #[error("below noise floor: delta_p = {dp_db:.3} dB is below the achievable floor of {floor_db:.3} dB")]
    BelowNoiseFloor { dp_db: f64, floor_db: f64 },

    /// Nonlinear fit failed to converge; carries the final weighted SSE and
    /// the parameter trace of the last iterations.
    #[error("fit did not converge after {iterations} iterations (weighted SSE {sse:.6e})")]
    FitNonConvergence {
        iterations: usize,
        sse: f64,
        trace: Vec<[f64; 5]>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI contract: 2 for domain/numeric errors,
    /// 3 for fit non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FitNonConvergence { .. } => 3,
            _ => 2,
        }
    }
}
