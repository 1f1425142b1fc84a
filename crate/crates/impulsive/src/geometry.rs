//! Charts, mechanical systems, and the kinetic-energy metric.
//!
//! A mechanical system is specified by a configuration chart, a Riemannian
//! metric g(q) (the kinetic-energy quadratic form on velocities), and a
//! potential V(q). The Hamiltonian is H(q, p) = T̂(q, p) + V(q) with
//! T̂ = ½ 𝒢(p, p), where 𝒢 = g⁻¹ is the co-metric acting on momenta.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numdiff;

/// Relative symmetry tolerance for metric matrices.
const SYMMETRY_TOL: f64 = 1e-9;

/// Condition-estimate bound beyond which a metric is reported singular.
pub const METRIC_CONDITION_BOUND: f64 = 1e12;

/// One-norm condition estimate of a square matrix given its inverse.
pub(crate) fn condition_estimate(m: &DMatrix<f64>, m_inv: &DMatrix<f64>) -> f64 {
    one_norm(m) * one_norm(m_inv)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Coordinate chart on the configuration manifold.
///
/// Quasi-coordinates (body frame angles and the like) are represented as
/// ordinary chart coordinates; angular coordinates may be flagged so output
/// layers can wrap them, but dynamics never wraps.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigChart {
    names: Vec<String>,
    wrap_flags: Vec<bool>,
}

impl ConfigChart {
    /// Chart with explicit coordinate names, none of them angular.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let wrap_flags = vec![false; names.len()];
        Self::with_wrap_flags(names, wrap_flags)
    }

    /// Chart with explicit names and per-coordinate angular flags.
    pub fn with_wrap_flags(names: Vec<String>, wrap_flags: Vec<bool>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidConfig("chart must have n ≥ 1".into()));
        }
        if names.len() != wrap_flags.len() {
            return Err(Error::DimensionMismatch {
                context: "chart wrap flags",
                expected: names.len(),
                found: wrap_flags.len(),
            });
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate coordinate name `{a}`"
                )));
            }
        }
        Ok(ConfigChart { names, wrap_flags })
    }

    /// Chart with coordinates named q1, …, qn.
    pub fn numbered(n: usize) -> Self {
        let names = (1..=n).map(|i| format!("q{i}")).collect();
        ConfigChart {
            names,
            wrap_flags: vec![false; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn wrap_flags(&self) -> &[bool] {
        &self.wrap_flags
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Point of the phase space T*M in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                context: "phase point",
                expected: q.len(),
                found: p.len(),
            });
        }
        if !q.iter().chain(p.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "phase point",
            });
        }
        Ok(PhasePoint { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(q),
            DVector::from_column_slice(p),
        )
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Same configuration, replaced momentum.
    pub fn with_momentum(&self, p: DVector<f64>) -> PhasePoint {
        PhasePoint {
            q: self.q.clone(),
            p,
        }
    }
}

type MetricFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type PotentialFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type MetricDerivativeFn = Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Mechanical Hamiltonian system H = T̂ + V on the cotangent bundle of a chart.
///
/// Immutable after construction; evaluation methods are pure, so values may be
/// shared freely across threads.
#[derive(Clone)]
pub struct MechanicalSystem {
    chart: ConfigChart,
    metric: MetricFn,
    potential: PotentialFn,
    metric_derivative: Option<MetricDerivativeFn>,
}

impl std::fmt::Debug for MechanicalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MechanicalSystem")
            .field("chart", &self.chart)
            .field(
                "metric_derivative",
                &self.metric_derivative.as_ref().map(|_| "analytic"),
            )
            .finish_non_exhaustive()
    }
}

impl MechanicalSystem {
    pub fn new<G, V>(chart: ConfigChart, metric: G, potential: V) -> Self
    where
        G: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        MechanicalSystem {
            chart,
            metric: Arc::new(metric),
            potential: Arc::new(potential),
            metric_derivative: None,
        }
    }

    /// System with a configuration-independent metric and zero potential.
    /// The metric derivative is exactly zero and set analytically.
    pub fn constant_metric(chart: ConfigChart, g: DMatrix<f64>) -> Self {
        let n = chart.dim();
        let zeros: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
        MechanicalSystem {
            chart,
            metric: Arc::new(move |_| g.clone()),
            potential: Arc::new(|_| 0.0),
            metric_derivative: Some(Arc::new(move |_| zeros.clone())),
        }
    }

    /// Flat system: identity metric, zero potential.
    pub fn euclidean(chart: ConfigChart) -> Self {
        let n = chart.dim();
        Self::constant_metric(chart, DMatrix::identity(n, n))
    }

    /// Replace the potential, keeping metric data.
    pub fn with_potential<V>(mut self, potential: V) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        self.potential = Arc::new(potential);
        self
    }

    /// Supply analytic metric derivatives ∂g/∂q^c (opt-in precision; the
    /// fallback is central finite differences).
    pub fn with_metric_derivative<D>(mut self, derivative: D) -> Self
    where
        D: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.metric_derivative = Some(Arc::new(derivative));
        self
    }

    /// Whether two systems share the identical metric and potential closures.
    /// Used to detect a Hamiltonian that is smooth across a critical surface:
    /// clones of one system share closures, independently built ones do not.
    pub fn shares_hamiltonian(&self, other: &MechanicalSystem) -> bool {
        Arc::ptr_eq(&self.metric, &other.metric)
            && Arc::ptr_eq(&self.potential, &other.potential)
    }

    pub fn chart(&self) -> &ConfigChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Metric matrix g(q), validated square, finite, and symmetric.
    pub fn metric_at(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = (self.metric)(q);
        let n = self.dim();
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "metric",
                expected: n,
                found: g.nrows().max(g.ncols()),
            });
        }
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { context: "metric" });
        }
        let scale = g.amax().max(1.0);
        let asym = (&g - g.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::MetricNotPositiveDefinite {
                q: q.iter().copied().collect(),
            });
        }
        Ok(g)
    }

    /// Co-metric 𝒢(q) = g(q)⁻¹, with positive-definiteness and conditioning
    /// checks. Positive definiteness is certified by the Cholesky
    /// factorization (it exists iff the smallest eigenvalue is positive).
    pub fn cometric_at(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.metric_at(q)?;
        let chol = g.clone().cholesky().ok_or(Error::MetricNotPositiveDefinite {
            q: q.iter().copied().collect(),
        })?;
        let inv = chol.inverse();
        let cond = condition_estimate(&g, &inv);
        if cond > METRIC_CONDITION_BOUND {
            return Err(Error::SingularMetric {
                q: q.iter().copied().collect(),
                cond,
            });
        }
        Ok(inv)
    }

    /// Partial derivatives [∂g/∂q^1, …, ∂g/∂q^n]: analytic when supplied,
    /// otherwise central finite differences.
    pub fn metric_derivative_at(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        match &self.metric_derivative {
            Some(d) => d(q),
            None => numdiff::matrix_partials(|qq| (self.metric)(qq), q),
        }
    }

    pub fn potential_at(&self, q: &DVector<f64>) -> f64 {
        (self.potential)(q)
    }

    /// Potential gradient ∂V/∂q by central finite differences.
    pub fn potential_gradient_at(&self, q: &DVector<f64>) -> DVector<f64> {
        numdiff::gradient(|qq| (self.potential)(qq), q)
    }

    /// Kinetic energy T̂(q, p) = ½ pᵗ 𝒢(q) p ≥ 0.
    pub fn kinetic_energy(&self, x: &PhasePoint) -> Result<f64> {
        let cometric = self.cometric_at(&x.q)?;
        Ok(0.5 * x.p.dot(&(&cometric * &x.p)))
    }

    /// Hamiltonian H(q, p) = T̂(q, p) + V(q).
    pub fn hamiltonian(&self, x: &PhasePoint) -> Result<f64> {
        Ok(self.kinetic_energy(x)? + self.potential_at(&x.q))
    }

    /// Anti-Legendre map: velocity v = 𝒢(q) p.
    pub fn anti_legendre(&self, x: &PhasePoint) -> Result<DVector<f64>> {
        Ok(self.cometric_at(&x.q)? * &x.p)
    }

    /// Legendre map: momentum p = g(q) v.
    pub fn legendre(&self, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.metric_at(q)? * v)
    }

    /// Co-metric pairing 𝒢(a, b) = aᵗ 𝒢(q) b of two covectors at q.
    pub fn cometric_inner(
        &self,
        q: &DVector<f64>,
        a: &DVector<f64>,
        b: &DVector<f64>,
    ) -> Result<f64> {
        let cometric = self.cometric_at(q)?;
        Ok(a.dot(&(&cometric * b)))
    }
}
