use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("triple {triple_id} references missing item {item_id}")]
    DanglingReference { triple_id: u64, item_id: u64 },
}

/// Failure to turn text into a record.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("missing-field: {0}")]
    MissingField(String),
    #[error("invalid-field: {field}: {message}")]
    InvalidField { field: String, message: String },
    #[error("not-an-object: record must be a JSON object")]
    NotAnObject,
}

impl ParseError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::InvalidField {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Shifts a syntax error offset by `base` bytes (used when the text was
    /// cut out of a larger stream).
    pub fn offset_by(self, base: usize) -> Self {
        match self {
            ParseError::Syntax { offset, message } => ParseError::Syntax {
                offset: offset + base,
                message,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("requested {requested} ids but corpus has {available}")]
    CountsExceedCorpus { requested: u64, available: usize },
    #[error("duplicate id in corpus: {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid histogram edges: {0}")]
    InvalidBins(String),
    #[error("k must be at least 1")]
    ZeroK,
}
