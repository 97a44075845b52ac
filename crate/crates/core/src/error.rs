use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{location}: key `{key}`: {reason}")]
    Config {
        key: String,
        location: String,
        reason: String,
    },

    #[error("noise bounds [{lower}, {upper}] rejected {attempts} consecutive draws")]
    BoundsExhausted {
        lower: f64,
        upper: f64,
        attempts: usize,
    },

    #[error("probability drift {drift:e} in a single step exceeds tolerance")]
    IntegrationDrift { drift: f64 },

    #[error("population entry {value:e} is negative beyond rounding")]
    NegativePopulation { value: f64 },

    #[error("rate generator is singular or reducible: {0}")]
    SingularGenerator(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("g2 - 1 is non-positive throughout the fit window")]
    NoBunching,

    #[error("exponential fit failed: {0}")]
    FitFailure(String),

    #[error("realization {index}: {source}")]
    Realization {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::BoundsExhausted { .. }
            | Error::IntegrationDrift { .. }
            | Error::NegativePopulation { .. }
            | Error::SingularGenerator(_) => true,
            Error::Realization { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}
