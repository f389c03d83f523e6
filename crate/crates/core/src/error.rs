use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model invariant was violated; `invariant` names it.
    #[error("invalid emitter model: {invariant}: {detail}")]
    InvalidModel { invariant: &'static str, detail: String },

    #[error("frequency {omega} is within {guard:e} of the pole at {pole}")]
    PoleProximity { omega: f64, pole: f64, guard: f64 },

    #[error("parameter Detuning({index}) is outside the excited subspace of dimension {dim}")]
    ParameterOutOfRange { index: usize, dim: usize },

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("field has zero norm")]
    ZeroField,

    #[error("time grid too coarse: spacing {dt:e} exceeds {max:e}")]
    GridTooCoarse { dt: f64, max: f64 },

    #[error("no root certified: {0}")]
    NoRootCertified(String),

    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    #[error("search window insufficient: tail envelope {envelope:e} exceeds {limit:e}")]
    WindowInsufficient { envelope: f64, limit: f64 },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of numerical certification (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoRootCertified(_) | Error::OptimizerFailure(_) | Error::WindowInsufficient { .. }
        )
    }
}
