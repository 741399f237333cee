use thiserror::Error;

use crate::valley::ValleyProfile;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential has no double-well structure: ε·g² = {0} ≥ √3/18")]
    DegeneratePotential(f64),
    #[error("derivative order {0} outside 1..=4")]
    DerivativeOrder(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("requested order {requested} exceeds cap {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("ε = {0} is not an exact rational")]
    NonRationalEpsilon(String),
    #[error("series has a vanishing coefficient at m = {0}; diagnostic not applicable")]
    ZeroCoefficient(usize),
    #[error("fit window [{lo}, {hi}] invalid for series of order {max}")]
    Window { lo: usize, hi: usize, max: usize },
    #[error("insufficient precision: {0}")]
    PrecisionLoss(String),
    #[error("Γ pole at s = {0}")]
    PoleOfGamma(String),
    #[error("integral diverges: {0}")]
    DivergentIntegral(String),
    #[error("ε = {0} is an integer; use the degenerate formula")]
    IntegerEpsilon(f64),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("eigenvalue {k} not converged: last {last:e}, previous {previous:e}")]
    NotConverged { k: usize, last: f64, previous: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("grid too coarse: residual floor {0:e}")]
    GridTooCoarse(f64),
    #[error("continuation stalled after {} samples: {reason}", profile.samples.len())]
    ContinuationStalled { reason: String, profile: Box<ValleyProfile> },
    #[error("insufficient samples: need {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
