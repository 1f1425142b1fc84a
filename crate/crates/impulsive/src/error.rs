//! Error types shared across the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of geometric, dynamic, and impact computations.
///
/// Configuration problems (`InvalidConfig`) are kept distinct from numerical
/// failures so that callers such as the CLI can map them to different exit
/// codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not match the chart dimension.
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// The kinetic-energy metric is not symmetric positive-definite at a
    /// queried configuration.
    #[error("metric is not symmetric positive-definite at q = {q:?}")]
    MetricNotPositiveDefinite { q: Vec<f64> },

    /// The metric is numerically singular (condition estimate beyond bound).
    #[error("metric numerically singular at q = {q:?} (condition estimate {cond:.3e})")]
    SingularMetric { q: Vec<f64>, cond: f64 },

    /// Constraint rows are linearly dependent at a queried configuration.
    #[error("constraint rows rank-deficient at q = {q:?}")]
    RankDeficientConstraints { q: Vec<f64> },

    /// The compatibility matrix B = J G⁻¹ Jᵗ is numerically singular; the
    /// nondegeneracy hypothesis of the constrained dynamics fails here.
    #[error("compatibility matrix singular at q = {q:?} (condition estimate {cond:.3e})")]
    CompatibilityFailure { q: Vec<f64>, cond: f64 },

    /// The projected surface gradient P(d_qf) vanishes: the constrained
    /// characteristic through this point is degenerate.
    #[error("transversality failure in {context}: ‖P(df)‖ = {norm:.3e} at q = {q:?}")]
    TransversalityFailure {
        context: &'static str,
        q: Vec<f64>,
        norm: f64,
    },

    /// A side of the discontinuity was required but is absent (wall side).
    #[error("side {side} of the discontinuous system is absent")]
    SideAbsent { side: &'static str },

    /// Fixed-step integration exceeded its step budget.
    #[error("integration exceeded max_steps = {max_steps}")]
    StepLimitExceeded { max_steps: usize },

    /// The decisive-point search exceeded its iteration cap without either
    /// finding a decisive point or detecting trapping.
    #[error("decisive-point search undecided after {iterations} iterations")]
    Undecided { iterations: usize },

    /// A phase point or derived quantity contains non-finite entries.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// Invalid run or system configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Output files could not be written.
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is a configuration problem rather than a
    /// numerical failure (drives the CLI exit code split).
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }
}
