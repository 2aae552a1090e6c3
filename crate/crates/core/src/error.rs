use thiserror::Error;

/// Errors produced by the numerical routines, estimators and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("invalid bandwidth {0}; bandwidths must be positive and finite")]
    InvalidBandwidth(f64),

    #[error("kernel `{0}` is not integrable; spatial evaluation is refused")]
    NotIntegrable(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("no flat region of the empirical characteristic function found below D = {d_max}")]
    NoFlatRegion { d_max: f64 },

    #[error("empty bandwidth grid")]
    EmptyGrid,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    /// True for failures that come from bad user input rather than from the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
