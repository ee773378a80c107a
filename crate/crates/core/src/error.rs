use thiserror::Error;

/// Syntax error in concept text, with the byte offset where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError { position, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("pattern is not ground: {0}")]
    PatternNotGround(String),
    #[error("unknown context {0}")]
    MissingContext(u32),
    #[error("unknown working-memory entry {0}")]
    MissingEntry(u64),
    #[error("no goal-tree importance configured for goal head `{0}`")]
    UnknownGoalClass(String),
    #[error("unknown goal {0}")]
    MissingGoal(u32),
    #[error("illegal goal transition for goal {goal}: already {status}")]
    IllegalTransition { goal: u32, status: String },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveFactor(f64),
    #[error("no prior negative emotion for outcome {0}")]
    MissingSource(u32),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("role `{0}` is unbound")]
    UnboundRole(String),
    #[error("episode validation failed: {0}")]
    Validation(String),
    #[error("no shared structure between episode and situation")]
    NoAnalogy,
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
