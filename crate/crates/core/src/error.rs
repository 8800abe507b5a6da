use thiserror::Error;

/// Errors raised by belief, annealing and planning operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Every particle carries zero weight; the belief is fully degenerate.
    #[error("particle weights sum to zero")]
    ZeroTotalWeight,

    #[error("tempering schedule needs at least 2 steps, got {0}")]
    InvalidK(usize),

    #[error("belief node has not been expanded")]
    NotExpanded,

    #[error("root belief has no particles")]
    EmptyRootBelief,

    #[error("invalid bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("{0} is not supported by this model")]
    Unsupported(&'static str),

    #[error("invalid particle set: {0}")]
    InvalidParticles(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
