use thiserror::Error;

/// Errors raised across the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("value {value:#x} does not fit in {width} bits")]
    WidthMismatch { value: u64, width: u32 },

    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },

    #[error("chain interval [{from}, {to}] is invalid for chain length {len}")]
    ChainInterval { from: u32, to: u32, len: u32 },

    #[error("problem too large: {0}")]
    SizeGuard(String),

    #[error("support mismatch between distributions")]
    SupportMismatch,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown register `{0}`")]
    UnknownRegister(String),

    #[error("register layout error: {0}")]
    Layout(String),

    #[error("operator is not a projector: {0}")]
    NotAProjector(String),

    #[error("measurement branch has zero probability")]
    ZeroNormBranch,

    #[error("the signing oracle may be queried at most once")]
    SecondSignQuery,

    #[error("malformed adversary program: {0}")]
    Program(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
