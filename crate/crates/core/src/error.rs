use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidSystem(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid interval map: {0}")]
    InvalidMap(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid mistake function: {0}")]
    InvalidMistake(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid roof: {0}")]
    InvalidRoof(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input too short: need {needed} points, have {available}")]
    LengthShortfall { needed: usize, available: usize },

    #[error("word is not admissible for the transition matrix")]
    Inadmissible,

    #[error("cylinder has zero measure")]
    ZeroMeasure,

    #[error("power iteration did not converge after {iterations} iterations (is the matrix primitive?)")]
    NoConvergence { iterations: usize },

    #[error("return search censored at k_max = {0}")]
    Censored(u64),

    #[error("operation not supported: {0}")]
    Unsupported(String),
}
