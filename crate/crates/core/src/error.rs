use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration the model does not cover, e.g. perfectly aligned
    /// symbols (delta = 0) where the two matched filters coincide.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("degenerate channel: |rho_ab| = {rho_ab_abs} makes Lambda(0) singular")]
    DegenerateChannel { rho_ab_abs: f64 },

    #[error("spectral factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("linear-domain recursion underflowed at epoch {epoch}; use the log-domain decoder")]
    Underflow { epoch: usize },

    #[error("exhaustive search over {candidates} sequences exceeds the cap of {cap}")]
    TooLarge { candidates: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
