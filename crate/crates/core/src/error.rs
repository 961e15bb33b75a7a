use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model or configuration parameter violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },
    /// A series or iteration hit its term cap before reaching tolerance.
    #[error("series did not converge after {terms} terms (relative residual {residual:e})")]
    NonConvergence { terms: usize, residual: f64 },
    /// Cholesky factorisation failed even after the maximal jitter.
    #[error("matrix not positive definite (dimension {dim}, jitter up to {jitter:e})")]
    NotPositiveDefinite { dim: usize, jitter: f64 },
    /// Drift expression syntax error.
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    /// Drift expression refers to a name outside `{t, x, y}` and the function table.
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    /// Drift evaluation left the domain of an operation.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// The requested combination of parameters is outside what the method covers.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
