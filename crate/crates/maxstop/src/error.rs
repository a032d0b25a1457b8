//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the model, solvers and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor input is outside its admissible set (r <= 0, sigma = 0, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The standing parameter assumption fails; the message names the
    /// violated inequality.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// An evaluation point lies outside the function's domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// An evaluation came too close to a pole of the boundary ODE.
    #[error("singularity guard: {0}")]
    SingularityError(String),

    /// The adaptive step controller underflowed away from any known pole.
    #[error("adaptive step underflow at s = {s:.6e}, q = {q:.6e}")]
    StepFailure { s: f64, q: f64 },

    /// Backward-anchored boundary construction failed re-verification.
    #[error("shooting failure: {0}")]
    ShootingFailure(String),

    /// An interpolated quantity was requested outside the sampled range.
    #[error("extrapolation outside sampled range: {0}")]
    ExtrapolationError(String),

    /// The obstacle-problem sweep did not reach its fixed point.
    #[error("LCP solver did not converge: residual {residual:.3e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    /// A grid slice contains no stopped node.
    #[error("no contact nodes in slice {slice} (s = {s:.6e})")]
    EmptyContact { slice: usize, s: f64 },

    /// A run configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    ConfigError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
