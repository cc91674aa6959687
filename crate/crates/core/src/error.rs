use thiserror::Error;

/// Errors produced by the bound evaluators, samplers, separators and the
/// transfer pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A named feasibility constraint of a bound formula does not hold.
    #[error("constraint violated: {0}")]
    ConstraintViolation(&'static str),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("matrix is numerically singular (eigenvalue {eigenvalue:e})")]
    Singular { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown unit id {0}")]
    UnknownUnit(usize),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

impl Error {
    /// True for failures caused by the data or arithmetic rather than by a
    /// malformed request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDirection(_)
                | Error::DegenerateData(_)
                | Error::Singular { .. }
                | Error::FitFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
