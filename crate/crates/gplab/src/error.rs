//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, solvers, and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be even and at least 8, got {0}")]
    BadGridSize(usize),

    #[error("domain half-length must be positive and finite, got {0}")]
    BadDomain(f64),

    #[error("soliton speed must satisfy 0 < |c| < sqrt(2), got {0}")]
    BadSpeed(f64),

    #[error("field has {found} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),

    #[error("density floor tripped at t = {t:.6}: min(1 - eta) = {min:.3e} < {floor:.3e}")]
    DensityFloor { t: f64, min: f64, floor: f64 },

    #[error("no soliton in the data: max eta = {max_eta:.3e} is flat")]
    NoSoliton { max_eta: f64 },

    #[error("newton solver stalled after {iters} iterations (residual {residual:.3e})")]
    NewtonStalled { iters: usize, residual: f64 },

    #[error("modulation tracking failed at t = {t:.6}: {reason}")]
    TrackFailed { t: f64, reason: String },

    #[error("modulation jacobian is numerically singular (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },

    #[error("modulation speed left the admissible window: c = {0}")]
    SpeedOutOfWindow(f64),

    #[error("state is outside the decomposition basin: |eps|_X = {0:.3e}")]
    OutsideBasin(f64),

    #[error("wave field modulus fell below {floor:.3e} (min {min:.3e}); phase is unreliable")]
    VanishingModulus { min: f64, floor: f64 },

    #[error("phase jump {jump:.3e} between consecutive samples exceeds the unwrap guard {guard:.3e}")]
    PhaseJump { jump: f64, guard: f64 },

    #[error("total phase winding {0:.6} cannot be cancelled by a single counter soliton")]
    WindingOutOfRange(f64),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable numeric code for the C ABI (keep in sync with `gplab-ffi`).
    pub fn code(&self) -> i32 {
        match self {
            Error::BadGridSize(_) | Error::BadDomain(_) | Error::BadSpeed(_) => 2,
            Error::LengthMismatch { .. } | Error::BadTimeStep(_) | Error::Config(_) => 2,
            Error::DensityFloor { .. }
            | Error::NoSoliton { .. }
            | Error::NewtonStalled { .. }
            | Error::TrackFailed { .. }
            | Error::SingularJacobian { .. }
            | Error::SpeedOutOfWindow(_)
            | Error::OutsideBasin(_)
            | Error::VanishingModulus { .. }
            | Error::PhaseJump { .. }
            | Error::WindingOutOfRange(_)
            | Error::Eigen(_) => 3,
            Error::Io(_) | Error::Json(_) => 4,
        }
    }
}
