use thiserror::Error;

/// Errors raised while building, analysing, or simulating port-Hamiltonian systems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interconnection matrix J is not skew-symmetric: |J + J^T| = {defect:e} > {tol:e}")]
    SkewViolation { defect: f64, tol: f64 },

    #[error("resistive matrix R is not symmetric: |R - R^T| = {defect:e} > {tol:e}")]
    SymViolation { defect: f64, tol: f64 },

    #[error("matrix is not symmetric: |M - M^T| = {defect:e} > {tol:e}")]
    NotSymmetric { defect: f64, tol: f64 },

    #[error("(J - R)Q is singular (reciprocal condition {rcond:e}); no isolated equilibrium")]
    SingularDynamics { rcond: f64 },

    #[error("port mismatch: plant has {plant} ports, controller has {controller}")]
    PortMismatch { plant: usize, controller: usize },

    #[error("J - R is singular (reciprocal condition {rcond:e}); energy-shaping form unavailable")]
    SingularJR { rcond: f64 },

    #[error("closed-loop plant matrix A is singular (reciprocal condition {rcond:e})")]
    SingularA { rcond: f64 },

    #[error("target Hessian W is singular (reciprocal condition {rcond:e})")]
    SingularW { rcond: f64 },

    #[error("state left the finite region at t = {time} (|z| = {magnitude:e})")]
    NonFinite { time: f64, magnitude: f64 },

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("degenerate alpha: denominator {denominator:e} is numerically zero")]
    DegenerateAlpha { denominator: f64 },

    #[error("model file: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, PhError>;
