//! Error types, one enum per subsystem.

use thiserror::Error;

/// Configuration validation and parsing errors.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// A parameter violates its physical-feasibility constraint.
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParam {
        name: String,
        value: String,
        constraint: String,
    },
    /// Several parameters violate their constraints; all are reported.
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigError>),
    /// The config file could not be parsed.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("missing [traffic] section (need duty_cycle or arrival_prob)")]
    MissingTraffic,
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// Stochastic-geometry kernel errors.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// The generic mapped intensity is singular at ε = 1; callers must use
    /// the dedicated limiting branch.
    #[error("mapped intensity is singular at epsilon = 1; use the closed branch")]
    EpsilonOne,
    #[error("quadrature failed to converge: {detail}")]
    QuadratureFailure { detail: String },
}

/// Beta fit / quantizer errors.
#[derive(Debug, Error)]
pub enum MetaError {
    /// Variance below the degeneracy floor: the beta parameters would blow
    /// up. Callers receive a point mass at the mean instead.
    #[error("degenerate variance {var:.3e}: meta distribution is a point mass at {mean}")]
    DegenerateVariance { mean: f64, var: f64 },
    #[error("bisection failed to bracket a root for target CDF {target}")]
    BisectionFailure { target: f64 },
}

/// Matrix-analytic / queueing errors.
#[derive(Debug, Error)]
pub enum QueueError {
    #[error("R iteration did not converge after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("queue is unstable for d = {d} (threshold {threshold})")]
    Unstable { d: f64, threshold: f64 },
    #[error("boundary system is singular beyond its expected null space")]
    SingularBoundary,
    #[error("waiting pmf failed to reach tail mass {target} within {max_terms} terms")]
    TruncationFailure { target: f64, max_terms: usize },
}

/// Coupled fixed-point errors.
#[derive(Debug, Error)]
pub enum FixedPointError {
    #[error("fixed point did not converge in {iters} iterations (last delta {delta:.3e})")]
    NonConvergence { iters: usize, delta: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

/// Combined error for the full analytical pipeline (fixed point + queueing).
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Queue(#[from] QueueError),
}

/// Simulator errors.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("degenerate realization: {nbs} base stations drawn (need >= 2)")]
    DegenerateRealization { nbs: usize },
    #[error("warm-up did not settle within {max_slots} slots")]
    WarmupTimeout { max_slots: usize },
    #[error("insufficient samples: {detail}")]
    InsufficientSamples { detail: String },
}
