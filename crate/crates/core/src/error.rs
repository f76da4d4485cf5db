use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid signature: {0}")]
    Signature(String),

    #[error("formula error: {0}")]
    Formula(String),

    #[error("invalid frame: {0}")]
    Frame(String),

    #[error("invalid algebra: {0}")]
    Algebra(String),

    #[error("sort mismatch: {0}")]
    Sort(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("size mismatch: {0}")]
    Size(String),

    #[error("enumeration cap exceeded: {what} requires {required}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("frame is not compatible: {0}")]
    Incompatible(String),

    #[error("algebra is not normal: {0}")]
    NotNormal(String),

    #[error("not a complete homomorphism: {0}")]
    NotHomomorphism(String),

    #[error("not a p-morphism: {0}")]
    NotPMorphism(String),

    #[error("proposition `{0}` has no value")]
    Unassigned(String),

    #[error("unbound variable `{0}`")]
    Unbound(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse_at(text: &str, offset: usize, message: impl Into<String>) -> Self {
        let (line, column) = line_col(text, offset);
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
