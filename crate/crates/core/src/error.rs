use thiserror::Error;

use crate::Axis;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least two points")]
    EmptyGrid,

    #[error("grid spacing is not uniform (first deviation at point {index})")]
    NonUniformGrid { index: usize },

    #[error("pre- and post-selected states are orthogonal, the weak value is undefined")]
    OrthogonalSelection,

    #[error("expected exactly {expected} applied stage(s), found {found}")]
    WrongStageCount { expected: usize, found: usize },

    #[error("branch state has no branches")]
    EmptyState,

    #[error("distribution has no mass")]
    EmptyDistribution,

    #[error("distributions are sampled on different grids")]
    GridMismatch,

    #[error("pointer density exceeds the rejection envelope at {at:e} (ratio {ratio})")]
    EnvelopeViolation { at: f64, ratio: f64 },

    #[error("rejection sampler accepted nothing in {0} proposals")]
    SamplerExhausted(usize),

    #[error("post-selected marginal along {axis:?} is not a pure state: surviving branches differ on another axis")]
    MixedMarginal { axis: Axis },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
