use thiserror::Error;

/// Errors shared by every module of the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("requested region [{lo}, {hi}] is outside the grid")]
    RegionError { lo: f64, hi: f64 },

    #[error("eigensolver failed: {0}")]
    NumericalFailure(String),

    #[error("ill-conditioned operation: {0}")]
    IllConditioned(String),

    #[error("Littlewood-Paley block at N = {0} carries no mass")]
    EmptyBlock(f64),

    #[error("source field is not finite at t = {0}")]
    SourceError(f64),

    #[error("causality budget violated: T = {t} exceeds R_max - R1 = {budget}")]
    CausalityError { t: f64, budget: f64 },

    #[error("precondition violated: {0}")]
    PreconditionError(String),

    #[error("shooting escaped before reaching s_min (seed too large or unstable)")]
    ShootFailure,

    #[error("profile range insufficient: {0}")]
    RangeError(String),

    #[error("exponents violate the radial Sobolev admissibility constraints: {0}")]
    InvalidExponents(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
