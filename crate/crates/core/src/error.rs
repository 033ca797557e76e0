use thiserror::Error;

/// Everything that can go wrong while building or solving a market.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("demand {demand} exceeds the feasibility peak {peak} of a fleet of {fleet}")]
    InfeasibleDemand { demand: f64, peak: f64, fleet: f64 },
    #[error("point is in the wild-goose-chase regime: {0}")]
    Regime(String),
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("solver did not converge: {message}")]
    ConvergenceFailure { message: String, trace: Vec<f64> },
    #[error("degenerate commission range: tau_1 = {tau_1} > tau_2 = {tau_2}")]
    DegenerateRange { tau_1: f64, tau_2: f64 },
    #[error("grid oracle supports at most {max} platforms, got {got}")]
    Dimension { max: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { path: path.into(), message: message.into() }
    }

    pub(crate) fn no_convergence(msg: impl Into<String>) -> Self {
        Error::ConvergenceFailure { message: msg.into(), trace: Vec::new() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
