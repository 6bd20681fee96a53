use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    Argument(String),
    /// Malformed binary input; `offset` is the byte offset of the bad record.
    Format { offset: usize, message: String },
    /// Well-formed input carrying an invalid value.
    Data(String),
    /// Operation not allowed in the object's current state (frozen/unfrozen).
    State(String),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Argument(m) => write!(f, "invalid argument: {m}"),
            Error::Format { offset, message } => {
                write!(f, "format error at byte offset {offset}: {message}")
            }
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::State(m) => write!(f, "state error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
