use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("term {value} at index {index} is outside {{-1, 0, +1}}")]
    RangeOverflow { index: usize, value: i32 },

    #[error("term {value} at index {index} is not a valid {expected} term")]
    InvalidTerm {
        index: usize,
        value: i32,
        expected: &'static str,
    },

    #[error("invalid character {0:?} in sequence literal")]
    InvalidLiteral(char),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("quadruple is not normal")]
    NotNormal,

    #[error("quadruple is not near-normal: {0}")]
    NotNearNormal(&'static str),

    #[error("not a valid T-sequence quadruple")]
    InvalidTs,

    #[error("not a valid base-sequence quadruple BS({m},{n})")]
    InvalidBs { m: usize, n: usize },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("enumeration of BS({m},{n}) is too large (2(m+n) = {} > 32)", 2 * (m + n))]
    TooLarge { m: usize, n: usize },

    #[error("malformed quad code {code:?}: {reason}")]
    MalformedCode { code: String, reason: String },

    #[error("invalid quad label: {0}")]
    InvalidQuadLabel(String),

    #[error("malformed hex code {0:?}")]
    MalformedHex(String),

    #[error("corrupt embedded data: {0}")]
    CorruptData(String),

    #[error("matrix is not a Hadamard matrix")]
    NotHadamard,

    #[error("postcondition failed in {stage}: {detail}")]
    PostconditionFailure { stage: &'static str, detail: String },

    #[error("acceptance failure: {0}")]
    AcceptanceFailure(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
