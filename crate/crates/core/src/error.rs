use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or inconsistent input data. `line` is 1-based and counts the
    /// header, matching what an editor shows.
    #[error("line {line}: {message}")]
    Input { line: u64, message: String },

    #[error("no records")]
    Empty,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The data left nothing to test (everything filtered or degenerate).
    #[error("{0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn input(line: u64, message: impl Into<String>) -> Self {
        Error::Input { line, message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// True for errors caused by the environment rather than the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        let message = format!("malformed CSV: {err}");
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => Error::Input { line, message },
        }
    }
}
