use thiserror::Error;

/// Errors raised while building terms, triples and graphs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RdfError {
    #[error("invalid IRI {0:?}: must be absolute and contain no whitespace")]
    InvalidIri(String),
    #[error("invalid blank node label {0:?}")]
    InvalidBlank(String),
    #[error("literal is not allowed in subject position")]
    LiteralSubject,
    #[error("predicate must be an IRI, found {0}")]
    NonIriPredicate(String),
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("input is not valid UTF-8 at line {line}")]
    Utf8 { line: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RdfError {
    fn from(e: std::io::Error) -> Self {
        RdfError::Io(e.to_string())
    }
}
