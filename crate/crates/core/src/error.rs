use alloc::string::String;

/// Errors raised by the design and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("direction (theta = {theta}, phi = {phi}) rad is outside the open region (-pi/2, pi/2)^2")]
    AngleOutOfDomain { theta: f64, phi: f64 },

    #[error("source {src} coincides with RIS element {element}")]
    CoincidentPositions { src: usize, element: usize },

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("beampattern map is identically zero; normalization is undefined")]
    ZeroMap,

    #[error("multiplier bisection did not converge after {iters} iterations (bracket [{lo:e}, {hi:e}])")]
    BisectionNotConverged { lo: f64, hi: f64, iters: usize },

    #[error("conjugate gradient stalled after {iters} iterations (relative residual {residual:e})")]
    CgNotConverged { iters: usize, residual: f64 },

    #[error("desired beam carries no energy at its center; cannot calibrate noise level")]
    ZeroBeamEnergy,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
