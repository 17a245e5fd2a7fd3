//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("alpha out of (0,1): {0}")]
    AlphaOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input field has nonzero mean (|coeff(0)| = {0:.3e})")]
    NonZeroMean(f64),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("symbol denominator vanished off the structural lines at ({a}, {b})")]
    DegenerateDenominator { a: f64, b: f64 },

    #[error("triple ({xi}, {eta}, {sigma}) lies outside the positive near-diagonal region")]
    OutsideNearDiagonal { xi: f64, eta: f64, sigma: f64 },

    #[error("lattice size {n} exceeds the cap {cap} for cubic-cost sums")]
    LatticeTooLarge { n: usize, cap: usize },

    #[error("field support |j| <= {got} exceeds the band limit {required} required here")]
    BandLimitExceeded { required: i64, got: i64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("time integration lost resolution at t = {t_last:.6}")]
    ResolutionLoss { t_last: f64 },
}
