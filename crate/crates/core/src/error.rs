//! Error types shared by all solvers.

use thiserror::Error;

/// Errors raised by grid construction, spectral operators and solvers.
#[derive(Debug, Error)]
pub enum SimError {
    /// Poisson right-hand side has a non-negligible spatial mean; the
    /// periodic problem `Δφ = rhs` is then inconsistent (e.g. `∫(b−n) ≠ 0`).
    #[error("Poisson rhs has non-zero mean {mean:.3e} (max norm {max:.3e})")]
    NonZeroMeanRhs { mean: f64, max: f64 },

    /// Newton iteration stalled before reaching the requested tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Damped line search could not keep the density iterate positive.
    #[error("line search hit the 2^-10 floor without a positive density iterate")]
    NegativeDensityIterate,

    /// A state field lost pointwise positivity of the density.
    #[error("non-positive density (min {min:.3e})")]
    NonPositiveDensity { min: f64 },

    /// The requested time step exceeds the advective CFL bound.
    #[error("CFL violation: dt {dt:.3e} > {dt_max:.3e}")]
    CflViolation { dt: f64, dt_max: f64 },

    /// A divergence constraint drifted past the configured tolerance.
    #[error("constraint drift in {constraint}: {value:.3e} > tol {tol:.3e}")]
    ConstraintDrift {
        constraint: &'static str,
        value: f64,
        tol: f64,
    },

    /// Fields that must share a grid do not.
    #[error("grid mismatch between operands")]
    GridMismatch,

    /// Rate fit was requested on fewer than 3 rows or non-positive errors.
    #[error("degenerate fit: {reason}")]
    DegenerateFit { reason: String },

    /// Doping profile cannot be bounded away from zero.
    #[error("inadmissible doping: lower bound {min_bound:.3e} <= 0")]
    InadmissibleDoping { min_bound: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
