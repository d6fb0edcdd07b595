use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left_name} is {left:?}, {right_name} is {right:?}")]
    Shape {
        op: &'static str,
        left_name: &'static str,
        left: (usize, usize),
        right_name: &'static str,
        right: (usize, usize),
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("membership constraint violated: {0}")]
    Constraint(String),
    #[error("budget {budget} exceeds pool of {pool}")]
    Budget { budget: usize, pool: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("strategy `{0}` requires a trained classifier")]
    RequiresModel(&'static str),
    #[error("label set does not match pending batch (missing {missing:?}, unexpected {unexpected:?})")]
    LabelMismatch {
        missing: Vec<usize>,
        unexpected: Vec<usize>,
    },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("pool exhausted")]
    Exhausted,
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("equal error rate is undefined when only one class is present")]
    UndefinedEer,
}

impl Error {
    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
