use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("csv parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("no usable rows ({dropped} dropped)")]
    EmptyData { dropped: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("column '{0}' has zero variance")]
    DegenerateColumn(String),

    #[error("model has {params} parameters but only {n} observations")]
    Underdetermined { params: usize, n: usize },

    #[error("design is rank deficient: column '{column}' is linearly dependent on earlier columns")]
    Collinear { column: String },

    #[error("model is saturated ({params} parameters, {n} observations); exact fits must be requested explicitly")]
    Saturated { params: usize, n: usize },

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("duplicate term '{0}'")]
    DuplicateTerm(String),

    #[error("hierarchy violation: {0}")]
    Hierarchy(String),

    #[error("missing value for predictor '{0}'")]
    MissingPredictor(String),

    #[error("predictor '{0}' is not part of the model")]
    SuperfluousPredictor(String),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("{0}")]
    Scope(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate ellipse: covariance of ({0}, {1}) is singular")]
    DegenerateEllipse(String, String),

    #[error("no candidate model could be fitted")]
    NoModel,

    #[error("search space of {0} candidate fits exceeds the limit")]
    SearchTooLarge(u128),
}
