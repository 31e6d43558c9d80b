use thiserror::Error;

/// Errors raised by the solvers, estimators and their supporting pieces.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing constant `{0}`")]
    MissingConstant(&'static str),

    #[error("point lies {distance:e} from the feasible set, beyond the neighborhood radius {radius:e}")]
    OutOfDomain { distance: f64, radius: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported kernel order beta = {0} (supported: 2 < beta <= 7)")]
    UnsupportedOrder(f64),

    #[error("numerical integration stalled at estimated error {achieved:e} (target {target:e})")]
    Integration { achieved: f64, target: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no stable configuration in the grid")]
    NoStableConfiguration,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A solver failed mid-run; `partial` holds the rows logged so far.
    #[error("run stopped after {} logged rows: {cause}", partial.rows().len())]
    Interrupted {
        partial: Box<crate::solvers::RunLog>,
        cause: Box<Error>,
    },
}

impl Error {
    /// The underlying error, looking through [`Error::Interrupted`].
    pub fn root(&self) -> &Error {
        match self {
            Error::Interrupted { cause, .. } => cause.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
