//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants are grouped by
//! cause: malformed inputs (grids, dimensions, exponents), regime violations
//! (parameters outside the theory's range of validity), and solver failures
//! (non-contracting fixed points, refinement budgets, oversized steps). The
//! solver-failure variants carry enough diagnostics to reconstruct what went
//! wrong without re-running.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A time parameter does not coincide with a grid node.
    #[error("time {0} is not a node of the grid")]
    OffGrid(f64),

    /// An interval was passed with endpoints out of order.
    #[error("invalid interval [{s}, {t}]: endpoints out of order")]
    BadInterval { s: f64, t: f64 },

    /// Two paths that must share a grid do not.
    #[error("paths are not sampled on a common grid")]
    GridMismatch,

    /// Inconsistent dimensions between paths, coefficients, or domains.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A grid is empty, too short, non-increasing, or non-finite.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A variation exponent outside the supported range.
    #[error("variation exponent p = {0} outside the supported range")]
    BadExponent(f64),

    /// Young pairing 1/p + 1/q must exceed 1.
    #[error("Young regime violated: 1/p + 1/q = {0} <= 1")]
    RegimeViolation(f64),

    /// The initial point must lie in the closed domain.
    #[error("starting point lies outside the closed domain")]
    StartOutsideDomain,

    /// The requested domain shape or feature is not in the catalogue.
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    /// The driver grid is too coarse to satisfy a partition condition.
    #[error("partition resolution failure: {0}")]
    PartitionResolution(String),

    /// The per-step fixed point failed to contract within its budget.
    #[error("fixed point not converged after {iterations} iterations (residual {residual:.3e})")]
    ContractionFailure {
        iterations: usize,
        residual: f64,
        /// Successive iterate gaps, for post-mortem decay analysis.
        history: Vec<f64>,
    },

    /// A single step violates the contraction smallness threshold and
    /// cannot be split further.
    #[error("step oscillation {osc:.3e} exceeds contraction threshold {threshold:.3e} on an unsplittable step")]
    StepTooLarge { osc: f64, threshold: f64 },

    /// A refinement ladder exhausted its level budget without meeting the
    /// requested tolerance.
    #[error("refinement did not converge within {levels} levels (last gap {last_gap:.3e})")]
    NoConvergence {
        levels: usize,
        last_gap: f64,
        /// Sup-distance between consecutive refinement iterates.
        gaps: Vec<f64>,
    },

    /// Too many per-sample failures in a Monte Carlo experiment.
    #[error("sample failure budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A required domain constant is unavailable for this shape.
    #[error("missing domain constant: {0}")]
    MissingConstant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV, config, or domain file content.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
