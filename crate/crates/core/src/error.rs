use thiserror::Error;

/// Coarse failure class, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Input,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown feature `{feature}` in {dimension} weight table")]
    UnknownFeature { dimension: String, feature: String },

    #[error("feature/weight mismatch for {dimension}: {detail}")]
    FeatureMismatch { dimension: String, detail: String },

    #[error("invalid population spec: {0}")]
    InvalidPopulation(String),

    #[error("missing rate cell: {0}")]
    MissingRateCell(String),

    #[error("policy state has no context for typology {0}")]
    UnknownTypology(String),

    #[error("no eligible action for typology {0}")]
    NoEligibleAction(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("contingency table has a zero marginal ({0})")]
    ZeroMarginal(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_)
            | Error::UnknownFeature { .. }
            | Error::FeatureMismatch { .. }
            | Error::InvalidPopulation(_)
            | Error::MissingRateCell(_)
            | Error::UnknownTypology(_)
            | Error::NoEligibleAction(_) => ErrorClass::Config,
            Error::Input(_) | Error::ZeroMarginal(_) | Error::Io { .. } | Error::Json(_) => {
                ErrorClass::Input
            }
            Error::Invariant(_) => ErrorClass::Internal,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
