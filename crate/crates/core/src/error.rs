use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("missing or non-numeric value at row {row}, column {col}")]
    MissingValue { row: usize, col: usize },
    #[error("unparseable timestamp {value:?} at row {row}")]
    InvalidTimestamp { row: usize, value: String },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(String),
    #[error("unknown target variable {0:?}")]
    UnknownTarget(String),
    #[error("dataset needs at least {required} rows, found {found}")]
    TooFewRows { required: usize, found: usize },
    #[error("variable {id:?} has {found} values, expected {expected}")]
    RaggedVariable { id: String, expected: usize, found: usize },
    #[error("non-finite value in variable {0:?}")]
    NonFiniteValue(String),

    #[error("smoothing span must be at least 1")]
    InvalidSpan,
    #[error("smoothing span {span} exceeds series length {len}")]
    SpanTooLarge { span: usize, len: usize },
    #[error("series of length {len} cannot hold a window of {required} steps")]
    SeriesTooShort { len: usize, required: usize },
    #[error("skip length must be at least 1")]
    InvalidSkip,
    #[error("split needs at least 2 windows, found {0}")]
    TooFewWindows(usize),
    #[error("split ratio {0} outside (0, 1)")]
    InvalidRatio(f64),
    #[error("representation {id}: {source}")]
    Representation { id: String, source: Box<Error> },

    #[error("series is constant")]
    ConstantSeries,
    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("regression design matrix is singular")]
    SingularRegression,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sequence has zero variance")]
    ZeroVariance,
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite input value")]
    NonFiniteInput,

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("non-finite activation in forward pass")]
    NonFiniteActivation,
    #[error("training loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("{count} features exceed the exact-enumeration limit of {max}; group features more coarsely")]
    TooManyFeatures { count: usize, max: usize },
    #[error("variable importance needs a multivariate dataset")]
    Univariate,
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
