use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate constellation: {0}")]
    Degenerate(String),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("constellation is not normalized to unit minimum distance (dmin = {0})")]
    NotNormalized(f64),

    #[error("optimization infeasible after {restarts} restarts (best residual {best_residual:e})")]
    Infeasible { restarts: usize, best_residual: f64 },

    #[error("lattice slice has {available} points, {requested} requested; increase the height cap")]
    SliceTooSmall { available: usize, requested: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("unknown catalog entry `{name}`; valid names: {valid}")]
    UnknownEntry { name: String, valid: String },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
