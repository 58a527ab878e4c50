use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("level mismatch: expected level {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular matrix at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("singular element {element}: gradient vanishes with exponent {exponent} < 2; set eps_reg > 0")]
    SingularElement { element: usize, exponent: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no embedding constant recorded for exponent {0}")]
    MissingConstant(f64),
    #[error("hypothesis (H2) violated: kappa = {0} >= 1")]
    HypothesisViolated(f64),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Config(#[from] crate::problem::ConfigError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
