use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is only defined in another diffusion regime.
    #[error("wrong regime: {0}")]
    WrongRegime(String),

    /// A scenario-level mismatch (e.g. absorption exponent not matching the scaling family).
    #[error("wrong scenario: {0}")]
    WrongScenario(String),

    /// Evaluation at the standing singularity x = 0.
    #[error("singular point: {0}")]
    SingularPoint(String),

    /// The initial datum is not resolved by the grid.
    #[error("under-resolved support: radius {rho} covers {cells} cells, at least {min_cells} required")]
    Resolution { rho: f64, cells: usize, min_cells: usize },

    /// Both ends of a shooting bracket produced the same trajectory class.
    #[error("bracket error: both endpoints classified as {lo} / {hi}")]
    Bracket { lo: String, hi: String },

    /// An iterative or adaptive method did not converge. Carries the best estimate.
    #[error("numerical failure: {message} (partial estimate {partial:e})")]
    Numerical { message: String, partial: f64 },

    /// Invalid configuration or model specification.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
