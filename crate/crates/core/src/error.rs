use thiserror::Error;

pub type Result<T> = std::result::Result<T, GkrError>;

/// Error type shared by every layer of the crate.
#[derive(Error, Debug)]
pub enum GkrError {
    /// Incompatible operand shapes. Both shapes are spelled out so the
    /// message pinpoints the offending call site.
    #[error("{op}: shape mismatch: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    /// An operation received a zero-norm vector where a direction is required.
    #[error("{op}: zero-norm vector")]
    ZeroNorm { op: &'static str },

    /// Caller violated an API contract (empty batch, bad fold ids, ...).
    #[error("{0}")]
    Usage(String),

    /// A manifest or feature file failed to parse. `line` is 1-based and
    /// counts the header.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Training or checking produced a non-finite value or an otherwise
    /// unusable numeric state.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl GkrError {
    pub fn shape(op: &'static str, lhs: impl Into<String>, rhs: impl Into<String>) -> Self {
        GkrError::Shape {
            op,
            lhs: lhs.into(),
            rhs: rhs.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        GkrError::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        GkrError::Numeric(msg.into())
    }

    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        GkrError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
