use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coin: {0}")]
    InvalidCoin(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("amplitude on undefined basis element: {0}")]
    UndefinedBasis(String),

    #[error("resource guard exceeded: {what} needs {requested}, limit is {limit}")]
    ResourceGuard {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("horizon exceeded: requested t = {requested}, available up to t = {horizon}")]
    Horizon { requested: usize, horizon: usize },

    #[error("series error: {0}")]
    Series(String),

    #[error("geometric sum does not converge: spectral radius {0:.6} >= 1")]
    NonConvergent(f64),

    #[error("branch ambiguity at z = {0}: both roots have modulus >= 1")]
    BranchAmbiguity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
