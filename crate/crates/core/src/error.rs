use thiserror::Error;

/// Errors raised by the measure, generator, transport and battery layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("potential is not finite at node {index} (x = {x})")]
    NonFinitePotential { index: usize, x: f64 },

    #[error("reference measure has zero total mass")]
    ZeroMass,

    #[error("truncation tail mass {tail:e} exceeds tolerance {tolerance:e}")]
    TailTooHeavy { tail: f64, tolerance: f64 },

    #[error("density ratio is negative at node {index} (value {value})")]
    NegativeDensity { index: usize, value: f64 },

    #[error("density ratio is not normalized: mu(f) = {mass}")]
    NotNormalized { mass: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem size {rows}x{cols} exceeds the cap {cap}x{cap}; use the sinkhorn backend")]
    SizeCap { rows: usize, cols: usize, cap: usize },

    #[error("no convergence after {iterations} iterations (last marginal error {last_error:e})")]
    NoConvergence { iterations: usize, last_error: f64 },

    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<LabError>,
    },
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidInput(msg.into())
    }

    pub(crate) fn at_time(self, time: f64) -> Self {
        LabError::AtTime {
            time,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
