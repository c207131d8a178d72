use thiserror::Error;

/// A violating pair of boundary nodes for the 1-Lipschitz data requirement.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LipschitzWitness {
    pub first: usize,
    pub second: usize,
    pub value_gap: f64,
    pub distance: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain bounds")]
    Domain { point: Vec<f64> },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("metric at {point:?} is not positive definite")]
    Metric { point: Vec<f64> },

    #[error("probe error: {0}")]
    Probe(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("no coercivity threshold found below {cap}")]
    Coercivity { cap: f64 },

    #[error("no convergence after {sweeps} sweeps, last update {residual:e}")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("boundary data is not 1-Lipschitz ({} violating pairs)", witnesses.len())]
    NotLipschitz { witnesses: Vec<LipschitzWitness> },

    #[error("expression error: {0}")]
    Expr(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
