use thiserror::Error;

/// Errors produced by the design and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to load system: {0}")]
    Load(String),

    #[error("levels {i} and {j} are degenerate (E = {energy}); transition sign and detuning are undefined")]
    Degenerate { i: usize, j: usize, energy: f64 },

    #[error("invalid transition pair: {0}")]
    InvalidPair(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("time {t} lies outside the sampled carrier domain [{start}, {end}]")]
    OutsideDomain { t: f64, start: f64, end: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("recurrence diverged at iteration {iteration}, t = {t}: denominator {denominator} is not positive")]
    Divergence {
        iteration: usize,
        t: f64,
        denominator: f64,
    },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last change {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trajectory covers [0, {covered}] but the pulse lasts {required}")]
    ShortTrajectory { covered: f64, required: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
