use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("query outside the reachable cone: {0}")]
    Reachability(String),

    #[error("fdd enumeration limit exceeded: n = {n}, limit = {limit}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("grid touches the support boundary: {0}")]
    GridOutsideCone(String),

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("acceptance starvation: {accepted} accepted after {attempts} attempts (wanted {wanted})")]
    AcceptanceStarvation {
        accepted: usize,
        attempts: u64,
        wanted: usize,
    },

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
