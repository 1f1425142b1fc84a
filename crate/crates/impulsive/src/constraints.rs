//! Affine constraint sets, the projector pair (P, Q), focusing points, and
//! trace / instantaneous constraint construction.
//!
//! A set of m affine constraints on velocities reads J(q)·q̇ + μ₀(q) = 0 with
//! covector rows μ_i = J(q)[i, :]. On momenta the same fiber is
//! C_q = {p : J 𝒢 p + μ₀ = 0}, an affine subspace modeled on the linear part
//! C⁰_q = {p : J 𝒢 p = 0}. The compatibility matrix B = J g⁻¹ Jᵗ splits the
//! momentum space 𝒢-orthogonally via Q(x) = Jᵗ B⁻¹ J 𝒢 x and P = id − Q: the
//! image of P is C⁰_q and the image of Q is the span of the constraint rows.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::geometry::{condition_estimate, MechanicalSystem, PhasePoint};
use crate::numdiff;

/// Relative tolerance for rank decisions (singular-value fallback).
const RANK_TOL: f64 = 1e-10;

/// Condition-estimate bound for the compatibility matrix.
pub const COMPATIBILITY_CONDITION_BOUND: f64 = 1e12;

/// Side of the critical hypersurface N = f⁻¹(0): Plus is the region f > 0,
/// Minus the region f < 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    /// Orientation sign: f · sign(side) ≥ 0 on the side's region.
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    /// Short label used in trajectory output.
    pub fn label(self) -> &'static str {
        match self {
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }

    /// Long label used in configuration and event records.
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

type RowsFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type OffsetFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Set of m affine velocity constraints J(q)·q̇ + μ₀(q) = 0.
///
/// The displacement form Υ is never stored: only the well-defined combination
/// Q(Υ) = −Jᵗ B⁻¹ μ₀ is ever computed (see [`CompatibilityData::offset_momentum`]).
#[derive(Clone)]
pub struct AffineConstraintSet {
    count: usize,
    rows: RowsFn,
    offset: OffsetFn,
}

impl std::fmt::Debug for AffineConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AffineConstraintSet")
            .field("count", &self.count)
            .finish_non_exhaustive()
    }
}

impl AffineConstraintSet {
    pub fn new<J, O>(count: usize, rows: J, offset: O) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        O: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        AffineConstraintSet {
            count,
            rows: Arc::new(rows),
            offset: Arc::new(offset),
        }
    }

    /// Linear constraints with constant rows and zero affine part.
    pub fn linear(j: DMatrix<f64>) -> Self {
        let m = j.nrows();
        Self::new(m, move |_| j.clone(), move |_| DVector::zeros(m))
    }

    /// Constant rows with a constant affine part.
    pub fn constant(j: DMatrix<f64>, mu0: DVector<f64>) -> Self {
        let m = j.nrows();
        assert_eq!(m, mu0.len(), "offset length must match row count");
        Self::new(m, move |_| j.clone(), move |_| mu0.clone())
    }

    /// The empty constraint set (m = 0): the free side of a discontinuity.
    pub fn empty() -> Self {
        Self::new(
            0,
            |q: &DVector<f64>| DMatrix::zeros(0, q.len()),
            |_| DVector::zeros(0),
        )
    }

    /// Stack two sets over the same chart (used to append instantaneous rows).
    pub fn stacked(base: &AffineConstraintSet, extra: &AffineConstraintSet) -> Self {
        let (r1, r2) = (base.rows.clone(), extra.rows.clone());
        let (o1, o2) = (base.offset.clone(), extra.offset.clone());
        let (m1, m2) = (base.count, extra.count);
        AffineConstraintSet {
            count: m1 + m2,
            rows: Arc::new(move |q| {
                let top = r1(q);
                let bottom = r2(q);
                let mut out = DMatrix::zeros(m1 + m2, top.ncols());
                out.view_mut((0, 0), (m1, top.ncols())).copy_from(&top);
                out.view_mut((m1, 0), (m2, bottom.ncols()))
                    .copy_from(&bottom);
                out
            }),
            offset: Arc::new(move |q| {
                let mut out = DVector::zeros(m1 + m2);
                out.rows_mut(0, m1).copy_from(&o1(q));
                out.rows_mut(m1, m2).copy_from(&o2(q));
                out
            }),
        }
    }

    /// Number of constraints m.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Row matrix J(q), validated for shape and finiteness.
    pub fn rows_at(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = (self.rows)(q);
        if j.nrows() != self.count || j.ncols() != q.len() {
            return Err(Error::DimensionMismatch {
                context: "constraint rows",
                expected: self.count * q.len(),
                found: j.nrows() * j.ncols(),
            });
        }
        if !j.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "constraint rows",
            });
        }
        Ok(j)
    }

    /// Affine part μ₀(q), validated.
    pub fn offset_at(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let mu0 = (self.offset)(q);
        if mu0.len() != self.count {
            return Err(Error::DimensionMismatch {
                context: "constraint offset",
                expected: self.count,
                found: mu0.len(),
            });
        }
        if !mu0.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "constraint offset",
            });
        }
        Ok(mu0)
    }
}

type SurfaceFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Critical hypersurface N = f⁻¹(0) with an oriented defining function.
#[derive(Clone)]
pub struct CriticalSurface {
    f: SurfaceFn,
    gradient: Option<GradientFn>,
}

impl std::fmt::Debug for CriticalSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CriticalSurface")
            .field("gradient", &self.gradient.as_ref().map(|_| "analytic"))
            .finish_non_exhaustive()
    }
}

impl CriticalSurface {
    /// Surface from f alone; the gradient falls back to finite differences.
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        CriticalSurface {
            f: Arc::new(f),
            gradient: None,
        }
    }

    /// Surface with an analytic gradient (preferred: higher-order boundary
    /// classification is noticeably more accurate with it).
    pub fn with_gradient<F, G>(f: F, gradient: G) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        CriticalSurface {
            f: Arc::new(f),
            gradient: Some(Arc::new(gradient)),
        }
    }

    pub fn value(&self, q: &DVector<f64>) -> f64 {
        (self.f)(q)
    }

    /// d_qf, analytic when supplied, else central finite differences.
    pub fn gradient_at(&self, q: &DVector<f64>) -> DVector<f64> {
        match &self.gradient {
            Some(g) => g(q),
            None => numdiff::gradient(|qq| (self.f)(qq), q),
        }
    }
}

/// Pointwise compatibility data of (system, constraints) at a configuration:
/// the rows J, offset μ₀, co-metric 𝒢, momentum-form rows A = J𝒢, and the
/// factorized compatibility matrix B = J g⁻¹ Jᵗ.
#[derive(Clone, Debug)]
pub struct CompatibilityData {
    q: DVector<f64>,
    j: DMatrix<f64>,
    mu0: DVector<f64>,
    cometric: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    cond: f64,
}

impl CompatibilityData {
    pub fn new(
        system: &MechanicalSystem,
        constraints: &AffineConstraintSet,
        q: &DVector<f64>,
    ) -> Result<Self> {
        let cometric = system.cometric_at(q)?;
        let j = constraints.rows_at(q)?;
        let mu0 = constraints.offset_at(q)?;
        let m = constraints.count();
        if m >= q.len() && m > 0 {
            return Err(Error::InvalidConfig(format!(
                "constraint count m = {m} must be below the dimension n = {}",
                q.len()
            )));
        }
        let a = &j * &cometric;
        let mut b = &a * j.transpose();
        // Symmetrize to wash out roundoff before factoring.
        b = (&b + b.transpose()) * 0.5;
        if m == 0 {
            return Ok(CompatibilityData {
                q: q.clone(),
                j,
                mu0,
                cometric,
                a,
                b,
                chol: None,
                cond: 1.0,
            });
        }
        let chol = match b.clone().cholesky() {
            Some(c) => c,
            None => {
                // B is PSD by construction, so failure means rank-deficient
                // rows; confirm with the singular values of J.
                let svd = j.clone().svd(false, false);
                let smax = svd.singular_values.max();
                let smin = svd.singular_values.min();
                if smin <= RANK_TOL * smax.max(1.0) {
                    return Err(Error::RankDeficientConstraints {
                        q: q.iter().copied().collect(),
                    });
                }
                return Err(Error::CompatibilityFailure {
                    q: q.iter().copied().collect(),
                    cond: f64::INFINITY,
                });
            }
        };
        let b_inv = chol.inverse();
        let cond = condition_estimate(&b, &b_inv);
        if cond > COMPATIBILITY_CONDITION_BOUND {
            return Err(Error::CompatibilityFailure {
                q: q.iter().copied().collect(),
                cond,
            });
        }
        Ok(CompatibilityData {
            q: q.clone(),
            j,
            mu0,
            cometric,
            a,
            b,
            chol: Some(chol),
            cond,
        })
    }

    pub fn configuration(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn cometric(&self) -> &DMatrix<f64> {
        &self.cometric
    }

    /// Compatibility matrix B = J g⁻¹ Jᵗ (m×m; empty when m = 0).
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// One-norm condition estimate of B.
    pub fn condition(&self) -> f64 {
        self.cond
    }

    /// Solve B s = rhs.
    pub fn solve_b(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(chol) => chol.solve(rhs),
            None => DVector::zeros(0),
        }
    }

    /// Q(x) = Jᵗ B⁻¹ J 𝒢 x.
    pub fn q_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.j.nrows() == 0 {
            return DVector::zeros(x.len());
        }
        let t = &self.a * x;
        let s = self.solve_b(&t);
        self.j.transpose() * s
    }

    /// P(x) = x − Q(x).
    pub fn p_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x - self.q_apply(x)
    }

    /// The momentum offset Q(Υ) = −Jᵗ B⁻¹ μ₀ of the affine fiber.
    pub fn offset_momentum(&self) -> DVector<f64> {
        if self.j.nrows() == 0 {
            return DVector::zeros(self.cometric.nrows());
        }
        let s = self.solve_b(&self.mu0);
        -(self.j.transpose() * s)
    }

    /// Momentum-form residual J 𝒢 p + μ₀ of a momentum covector.
    pub fn residual(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.a * p + &self.mu0
    }

    /// Q as an explicit matrix (test and reference use).
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let n = self.cometric.nrows();
        let mut out = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            out.set_column(k, &self.q_apply(&e));
        }
        out
    }

    /// P as an explicit matrix.
    pub fn p_matrix(&self) -> DMatrix<f64> {
        DMatrix::identity(self.cometric.nrows(), self.cometric.nrows()) - self.q_matrix()
    }
}

/// Compatibility data of (system, constraints) at q; errors if the rows are
/// rank-deficient or B is numerically singular.
pub fn compatibility(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
) -> Result<CompatibilityData> {
    CompatibilityData::new(system, constraints, q)
}

/// Q(x) = Jᵗ B⁻¹ J 𝒢 x at q.
pub fn project_q(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(compatibility(system, constraints, q)?.q_apply(x))
}

/// P(x) = x − Q(x) at q.
pub fn project_p(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(compatibility(system, constraints, q)?.p_apply(x))
}

/// The affine offset Q(Υ) = −Jᵗ B⁻¹ μ₀(q); zero for linear constraints, and
/// independent of the choice of displacement form Υ.
pub fn affine_offset(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
) -> Result<DVector<f64>> {
    Ok(compatibility(system, constraints, q)?.offset_momentum())
}

/// Focusing point of u: the unique point P(u) + Q(Υ) of the affine fiber over
/// π(u); equivalently the 𝒢-nearest point of the fiber.
pub fn focusing_point(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    u: &PhasePoint,
) -> Result<PhasePoint> {
    let data = compatibility(system, constraints, &u.q)?;
    let p = data.p_apply(&u.p) + data.offset_momentum();
    Ok(u.with_momentum(p))
}

/// Momentum-form constraint residual J(q) 𝒢(q) p + μ₀(q); empty for m = 0.
pub fn constraint_residual(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    x: &PhasePoint,
) -> Result<DVector<f64>> {
    Ok(compatibility(system, constraints, &x.q)?.residual(&x.p))
}

/// Trace constraint set C^tr = C ∩ {d_qf(q̇) = 0}: the original rows plus the
/// surface gradient as an extra row with zero affine part. Transversality of
/// the appended row is checked where the set is used (pointwise).
pub fn trace_constraints(
    constraints: &AffineConstraintSet,
    surface: &CriticalSurface,
) -> AffineConstraintSet {
    let gradient_row = surface.clone();
    let extra = AffineConstraintSet::new(
        1,
        move |q: &DVector<f64>| {
            let grad = gradient_row.gradient_at(q);
            DMatrix::from_rows(&[grad.transpose()])
        },
        |_| DVector::zeros(1),
    );
    AffineConstraintSet::stacked(constraints, &extra)
}

/// Instantaneous projector pair (Pⁱⁿˢᵗ(x), Qⁱⁿˢᵗ(x)) at q: the same matrix
/// machinery applied to the instantaneous constraint set.
pub fn instantaneous_projectors(
    system: &MechanicalSystem,
    inst_constraints: &AffineConstraintSet,
    q: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let data = compatibility(system, inst_constraints, q)?;
    let q_part = data.q_apply(x);
    Ok((x - &q_part, q_part))
}
