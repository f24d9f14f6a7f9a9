use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Group sizes below 2 leave the coupling unidentifiable (S² is constant).
    #[error("invalid population size {0}: groups need at least 2 voters")]
    InvalidPopulation(usize),

    #[error("coupling must be finite, got {0}")]
    NonFiniteCoupling(f64),

    #[error("unsupported absolute moment order {0}: only 1 and 3 are available")]
    UnsupportedOrder(u32),

    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed vote at row {row}, column {col}: {found}")]
    MalformedData {
        row: usize,
        col: usize,
        found: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("enumeration oracle capped at N = {cap}, got N = {requested}")]
    OracleCap { requested: usize, cap: usize },

    #[error("group {index}: {source}")]
    Group {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags the error with the index of the group it came from.
    pub fn in_group(self, index: usize) -> Self {
        Error::Group {
            index,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through group annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Group { source, .. } => source.root(),
            other => other,
        }
    }
}
