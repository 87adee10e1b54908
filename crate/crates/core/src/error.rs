use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("frame {frame}: vector at ({u}, {v}) lies outside the {width}x{height} frame")]
    OutOfBounds {
        frame: u64,
        u: f64,
        v: f64,
        width: u32,
        height: u32,
    },

    #[error("frame index {found} does not follow frame index {previous}")]
    Ordering { previous: u64, found: u64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("insufficient data: {what} (have {available})")]
    InsufficientData {
        what: &'static str,
        available: usize,
    },

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("solver diverged: omega = {omega}")]
    Divergence { omega: f64 },

    #[error("solver did not converge after {iterations} iterations (last omega = {omega})")]
    NonConvergence { iterations: usize, omega: f64 },

    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("image row {v} is at or above the horizon")]
    Horizon { v: f64 },

    #[error("scene script: {0}")]
    Script(String),
}
