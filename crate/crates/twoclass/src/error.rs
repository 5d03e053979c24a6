//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or estimator parameter is outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Income arguments must be non-negative.
    #[error("income must be non-negative, got {0}")]
    NegativeIncome(f64),

    /// Moments of the tail diverge for pareto_index <= 1.
    #[error("mean diverges for pareto_index <= 1 (got {0})")]
    DivergentMean(f64),

    /// A sample of zero draws was requested.
    #[error("requested an empty sample")]
    EmptySampleRequest,

    /// The schema references a column the input header does not provide.
    #[error("schema error: input is missing the configured {field} column {column:?}")]
    MissingColumn { field: &'static str, column: String },

    /// Schema configuration could not be parsed or is incomplete.
    #[error("schema config error: {0}")]
    Config(String),

    /// An operation that needs records received none.
    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    /// Not enough observations for the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The regression design has no spread to fit against.
    #[error("degenerate regression: {0}")]
    DegenerateRegression(&'static str),

    /// A Lorenz curve cannot be built from zero total income.
    #[error("degenerate Lorenz curve: total income is zero")]
    DegenerateCurve,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 schema/config, 3 insufficient data, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidParameter { .. }
            | Error::NegativeIncome(_)
            | Error::DivergentMean(_)
            | Error::EmptySampleRequest
            | Error::MissingColumn { .. }
            | Error::Config(_) => 2,
            Error::EmptyDataset(_)
            | Error::InsufficientData(_)
            | Error::DegenerateRegression(_)
            | Error::DegenerateCurve => 3,
            Error::Io(_) => 4,
        }
    }
}
