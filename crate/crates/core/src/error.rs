use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unsupported cubature formula: degree {degree}, dimension {dim}")]
    UnsupportedFormula { degree: u32, dim: usize },

    #[error("invalid cubature formula: {0}")]
    InvalidFormula(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("word {word} exceeds supported order {max}")]
    OrderTooLarge { word: String, max: u32 },

    #[error("derivative of order {requested} requested, problem supports at most {max}")]
    DerivativeOrder { requested: u32, max: u32 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("ODE substep budget of {0} exhausted")]
    SubstepBudget(usize),

    #[error("interpolation nodes must have distinct times (duplicate at {0})")]
    DuplicateNode(f64),

    #[error("tree needs {needed} nodes but the budget is {max}")]
    NodeBudget { needed: u128, max: u64 },

    #[error("ODE failed at level {level}, tree path {path:?}: {source}")]
    OdeFailure {
        level: usize,
        path: Vec<usize>,
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
