use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid harmonic space: {0}")]
    InvalidHarmonicSpace(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// The kernel search could not resolve the requested number of null vectors.
    #[error("kernel extraction failed at degree {degree:?}: found {found} of {expected} vectors ({detail})")]
    KernelExtraction {
        degree: Option<usize>,
        expected: usize,
        found: usize,
        detail: String,
    },

    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("at refinement level {level}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
