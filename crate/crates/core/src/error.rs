use thiserror::Error;

/// Errors raised by the channel, capacity, geometry and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("not a tangent vector: entries sum to {0:e}")]
    NotTangent(f64),

    #[error("support violation at index {index}: p > 0 where q = 0")]
    SupportViolation { index: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("constraint set is infeasible: no input distribution satisfies every constraint")]
    Infeasible,

    #[error("output {0} cannot be reached by any feasible input")]
    UnreachableOutput(usize),

    #[error(
        "capacity-achieving set is empty (support tolerance too small for the solver residual)"
    )]
    EmptyPiSet,

    #[error(
        "degenerate channel: every feasible input achieves capacity, no valid directions exist"
    )]
    Degenerate,

    #[error("point lies in the capacity-achieving set (distance {0:e})")]
    PointInPi(f64),

    #[error("t = {t} outside the envelope domain [0, {limit})")]
    OutsideEnvelope { t: f64, limit: f64 },

    #[error("point is not a valid input distribution")]
    InfeasiblePoint,

    #[error("capacity-achieving output distribution has zero mass at output {0}")]
    ZeroOutput(usize),

    #[error("decay estimate is not positive ({alpha:e}); check the support tolerance")]
    NonPositiveAlpha { alpha: f64 },

    #[error("no sample reached the mu-neighbourhood (mu = {mu:e}) after {attempts} attempts")]
    NeighbourhoodMiss { mu: f64, attempts: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("quadratic program did not converge")]
    Qp,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
