use thiserror::Error;

/// Location of a diagnostic inside a text source (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },

    #[error("module `{module}`: {msg}")]
    Module { module: String, msg: String },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("non-safety formula: {0}")]
    NonSafety(String),

    #[error("action `{0}` is already agent-prefixed")]
    Prefixed(String),

    #[error("invalid permutation: {0}")]
    Permutation(String),

    #[error("{0} modules is too many for {1}")]
    TooLarge(usize, &'static str),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("verdict for `{req}` on revision {perm} is an unverified prediction")]
    Unverified { req: String, perm: String },

    #[error("rejection sampling gave up after {budget} draws ({accepted} accepted)")]
    RetryBudget { budget: usize, accepted: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn syntax(line: usize, column: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos: Pos { line, column },
        msg: msg.into(),
    }
}
