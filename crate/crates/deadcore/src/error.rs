use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kinetic has an unbounded derivative and cannot be mollified")]
    UnboundedDerivative,

    #[error("1/G is not integrable at 0 (no dead-core bound available)")]
    NonIntegrableGrowth,

    #[error("singular transform: |tau| * sup|Dtheta| = {0} >= 1")]
    SingularTransform(f64),

    #[error("element {0} inverted (measure <= 0) after perturbation")]
    InvertedElement(usize),

    #[error("empty target node set")]
    EmptyTarget,

    #[error("coefficient matrix is not positive definite at element {0}")]
    NonSpdCoefficient(usize),

    #[error("kinetic is invalid for this solve: beta(0) != 0")]
    InvalidKinetic,

    #[error("node {0} carries an infinite potential but is not frozen")]
    UnfrozenInfinitePotential(usize),

    #[error("singular linear system (zero or negative pivot at row {0})")]
    SingularSystem(usize),

    #[error("no dead core on the slab: L = {length} < Psi(1) = {psi_one}")]
    NoDeadCore { length: f64, psi_one: f64 },

    #[error("hypothesis 0 <= f <= beta(1) violated at node {0}")]
    HypothesisViolated(usize),

    #[error("empty dead-core region")]
    EmptyRegion,

    #[error("insufficient samples for the rate fit: {0} usable nodes (need >= 10)")]
    InsufficientSamples(usize),

    #[error("boundary curvature undefined on a non-negligible fraction of the boundary")]
    CornerBoundary,

    #[error("solver did not converge: {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
