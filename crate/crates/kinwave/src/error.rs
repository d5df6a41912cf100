use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("condition failure: {0}")]
    Condition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Condition(_) => 2,
            Error::Input(_) | Error::Io(_) => 3,
            Error::Domain(_) | Error::Numerical(_) => 4,
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
