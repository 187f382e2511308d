use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("newton solve failed at cell {cell}: {reason}")]
    Newton { cell: usize, reason: String },
    #[error("energy increased at step {step}: {before:e} -> {after:e}")]
    EnergyIncrease { step: usize, before: f64, after: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
