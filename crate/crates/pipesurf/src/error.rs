//! Error type shared by all modules.

use thiserror::Error;

use crate::discrete::Staggering;

#[derive(Debug, Error)]
pub enum Error {
    /// The centerline loses regularity (zero speed or zero curvature).
    #[error("degenerate curve at omega = {omega}: {reason}")]
    DegenerateCurve { omega: f64, reason: String },

    /// Requested catalog entry does not exist.
    #[error("unknown catalog kind `{0}`")]
    UnknownKind(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// The coordinate map degenerates: the Jacobian determinant is not
    /// strictly positive at the quoted point.
    #[error("non-positive jacobian at (r, theta, omega) = ({r}, {theta}, {omega}): J = {value}")]
    NonPositiveJacobian {
        r: f64,
        theta: f64,
        omega: f64,
        value: f64,
    },

    /// The geometry is outside what the discretization supports
    /// (for example a centerline whose torsion–speed product varies).
    #[error("geometry unsupported by the scheme: {0}")]
    UnsupportedGeometry(String),

    /// Two grid arrays with different staggering were combined.
    #[error("staggering mismatch: expected {expected:?}, got {got:?}")]
    StaggeringMismatch {
        expected: Staggering,
        got: Staggering,
    },

    /// Invalid numeric input to a pure computation (log of a nonpositive
    /// ratio, empty refinement list, ...).
    #[error("domain error: {0}")]
    DomainError(String),

    /// The linear solver failed to produce a solution at the requested
    /// tolerance (singular factor or stagnation).
    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}
