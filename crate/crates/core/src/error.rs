use thiserror::Error;

/// Every failure mode of the toolkit.
///
/// Geometric predicates report the offending value so callers can log it
/// without re-evaluating.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter z = {z} is within separation of the pole a = {pole}")]
    Pole { z: f64, pole: f64 },

    #[error("point is off the quadric: residual {residual:e} exceeds {tol:e}")]
    OffQuadric { residual: f64, tol: f64 },

    #[error("normal vector is zero")]
    ZeroNormal,

    #[error("line is degenerate for this family: cleared tangency polynomial vanishes identically")]
    DegenerateLine,

    #[error("branch pole: 1 - z*a vanishes for block eigenvalue {eigenvalue}")]
    BranchPole { eigenvalue: String },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("elliptic coordinates do not interlace: {0}")]
    Interlacing(String),

    #[error("point lies on coordinate plane x{axis} = 0; use a boundary chart")]
    CoordinatePlane { axis: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("radicand changes sign inside [{lo}, {hi}]")]
    Interval { lo: f64, hi: f64 },

    #[error("roots of the radical are not separated: {0}")]
    Separation(String),

    #[error("quadrature did not converge: relative change {change:e} after {nodes} nodes")]
    NoConvergence { change: f64, nodes: usize },

    #[error("no closure found: {reason}")]
    NotFound { reason: String, grid: Vec<Vec<f64>> },

    #[error("step control failed: {0}")]
    Stiffness(String),

    #[error("no real tangent line: {0}")]
    NoRealTangent(String),

    #[error("tangent cones are degenerate: {0}")]
    ConeDegeneracy(String),

    #[error("thread configuration infeasible: {0}")]
    InfeasibleThread(String),

    #[error("closure residual {residual:e} cannot be absorbed by the prescribed budgets")]
    ClosureResidual { residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scene is empty")]
    EmptyScene,
}

pub type Result<T> = std::result::Result<T, Error>;
