use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("constraint matrix contains a non-finite entry at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("need at least {needed} observations, got {got}")]
    Length { needed: usize, got: usize },

    #[error("no finite-kernel starting point found after {0} attempts")]
    Initialization(usize),

    #[error("regression design is singular (collinear summaries)")]
    SingularDesign,

    #[error("chain is empty")]
    EmptyChain,

    #[error("kernel bandwidth is zero for coordinate `{0}` (all draws identical)")]
    DegenerateBandwidth(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by invalid configuration or input data; the CLI reports
    /// them with exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Domain(_)
                | Error::Shape(_)
                | Error::Length { .. }
                | Error::NonFiniteInput { .. }
                | Error::EmptyChain
                | Error::DegenerateBandwidth(_)
        )
    }
}
