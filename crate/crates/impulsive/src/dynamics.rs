//! Free and constrained Hamiltonian vector fields, fixed-step integration
//! with boundary-event localization, and in/out/trapping classification of
//! boundary points by tangency order.

use nalgebra::DVector;

use crate::constraints::{AffineConstraintSet, CompatibilityData, CriticalSurface, Side};
use crate::error::{Error, Result};
use crate::geometry::{MechanicalSystem, PhasePoint};
use crate::numdiff;

/// Phase-space step length used by the nested directional derivatives in
/// [`classify_boundary`].
const LADDER_STEP: f64 = 1e-3;

/// Value of a Hamiltonian vector field at a phase point.
#[derive(Clone, Debug)]
pub struct PhaseVelocity {
    pub dq: DVector<f64>,
    pub dp: DVector<f64>,
}

/// Numerical parameters of the integrator and the boundary classifier.
#[derive(Clone, Debug)]
pub struct IntegrationConfig {
    /// Fixed RK4 step size.
    pub dt: f64,
    /// Bisection refinement bound on |f| at a boundary hit.
    pub event_tolerance: f64,
    /// Hard cap on accepted steps per segment.
    pub max_steps: usize,
    /// Threshold on |X^{j+1}(f)| deciding in/out at order j.
    pub boundary_order_tolerance: f64,
    /// Largest tangency order examined before declaring trapping (j_max ≥ 1).
    pub max_tangency_order: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 1e-3,
            event_tolerance: 1e-10,
            max_steps: 2_000_000,
            boundary_order_tolerance: 1e-6,
            max_tangency_order: 3,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step size dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(self.event_tolerance.is_finite() && self.event_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "event tolerance must be positive, got {}",
                self.event_tolerance
            )));
        }
        if !(self.boundary_order_tolerance.is_finite() && self.boundary_order_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "boundary order tolerance must be positive, got {}",
                self.boundary_order_tolerance
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if self.max_tangency_order == 0 {
            return Err(Error::InvalidConfig(
                "max_tangency_order must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A Hamiltonian vector field: the free field of a system, or the constrained
/// field of a system together with an affine constraint set.
#[derive(Clone, Debug)]
pub enum PhaseField<'a> {
    Free(&'a MechanicalSystem),
    Constrained(&'a MechanicalSystem, &'a AffineConstraintSet),
}

impl<'a> PhaseField<'a> {
    pub fn system(&self) -> &'a MechanicalSystem {
        match self {
            PhaseField::Free(s) => s,
            PhaseField::Constrained(s, _) => s,
        }
    }

    pub fn constraints(&self) -> Option<&'a AffineConstraintSet> {
        match self {
            PhaseField::Free(_) => None,
            PhaseField::Constrained(_, c) => Some(c),
        }
    }

    pub fn evaluate(&self, x: &PhasePoint) -> Result<PhaseVelocity> {
        match self {
            PhaseField::Free(s) => free_field(s, x),
            PhaseField::Constrained(s, c) => constrained_field(s, c, x),
        }
    }
}

/// Why a trajectory segment ended.
#[derive(Clone, Debug)]
pub enum TerminalCause {
    /// Integrated to the requested end time without touching the surface.
    ReachedEnd,
    /// Hit the critical surface; the point satisfies |f| < event_tolerance.
    BoundaryHit { point: PhasePoint, side: Side },
    /// The step budget ran out before the end time.
    StepLimit,
}

/// One regular (single-sided) piece of a trajectory.
#[derive(Clone, Debug)]
pub struct TrajectorySegment {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub terminal: TerminalCause,
}

impl TrajectorySegment {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("segment holds at least the start")
    }

    pub fn last_state(&self) -> &PhasePoint {
        self.states.last().expect("segment holds at least the start")
    }
}

/// Boundary classification of a point on N relative to the inside region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryClass {
    /// Motion enters the interior; decided at tangency order j.
    In { order: usize },
    /// Motion leaves the interior; decided at tangency order j.
    Out { order: usize },
    /// All examined derivatives of f vanish: the point stays on N.
    Trapping,
}

impl BoundaryClass {
    pub fn is_in(&self) -> bool {
        matches!(self, BoundaryClass::In { .. })
    }

    pub fn is_out(&self) -> bool {
        matches!(self, BoundaryClass::Out { .. })
    }

    pub fn is_trapping(&self) -> bool {
        matches!(self, BoundaryClass::Trapping)
    }
}

impl std::fmt::Display for BoundaryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryClass::In { order } => write!(f, "in(order {order})"),
            BoundaryClass::Out { order } => write!(f, "out(order {order})"),
            BoundaryClass::Trapping => f.write_str("trapping"),
        }
    }
}

/// The free Hamiltonian field: dq = 𝒢p, dp_a = ½ vᵗ(∂g/∂q^a)v − ∂V/∂q^a
/// (the kinetic term rewritten through the metric derivative; it equals
/// −½ pᵗ(∂𝒢/∂q^a)p).
pub fn free_field(system: &MechanicalSystem, x: &PhasePoint) -> Result<PhaseVelocity> {
    let n = x.dim();
    let v = system.anti_legendre(x)?;
    let dg = system.metric_derivative_at(&x.q);
    let dv = system.potential_gradient_at(&x.q);
    let mut dp = DVector::zeros(n);
    for a in 0..n {
        dp[a] = 0.5 * (&dg[a] * &v).dot(&v) - dv[a];
    }
    Ok(PhaseVelocity { dq: v, dp })
}

/// Residual Φ(q, p) = J(q) 𝒢(q) p + μ₀(q) of the constraint set, evaluated
/// with the momentum held fixed.
fn residual_at(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<DVector<f64>> {
    let cometric = system.cometric_at(q)?;
    Ok(constraints.rows_at(q)? * (cometric * p) + constraints.offset_at(q)?)
}

/// Central-difference Jacobian of q ↦ Φ(q, p) with p fixed (m×n).
fn residual_jacobian_q(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    q: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<nalgebra::DMatrix<f64>> {
    let n = q.len();
    let m = constraints.count();
    let h = numdiff::step(q);
    let mut out = nalgebra::DMatrix::zeros(m, n);
    for a in 0..n {
        let mut qp = q.clone();
        qp[a] += h;
        let mut qm = q.clone();
        qm[a] -= h;
        let fp = residual_at(system, constraints, &qp, p)?;
        let fm = residual_at(system, constraints, &qm, p)?;
        out.set_column(a, &((fp - fm) / (2.0 * h)));
    }
    Ok(out)
}

/// The constrained field: the free field plus the reaction Jᵗλ, where λ is
/// chosen so the constraint residual is preserved along the flow
/// (d/dt Φ = D_qΦ·q̇ + J𝒢·ṗ = 0 resolved through B = J𝒢Jᵗ).
pub fn constrained_field(
    system: &MechanicalSystem,
    constraints: &AffineConstraintSet,
    x: &PhasePoint,
) -> Result<PhaseVelocity> {
    let free = free_field(system, x)?;
    if constraints.count() == 0 {
        return Ok(free);
    }
    let data = CompatibilityData::new(system, constraints, &x.q)?;
    let d_q_phi = residual_jacobian_q(system, constraints, &x.q, &x.p)?;
    // A·ṗ_free + D_qΦ·v determines the reaction through B λ = −(…).
    let a = data.rows() * data.cometric();
    let rhs = &a * &free.dp + d_q_phi * &free.dq;
    let lambda = -data.solve_b(&rhs);
    let dp = free.dp + data.rows().transpose() * lambda;
    Ok(PhaseVelocity { dq: free.dq, dp })
}

fn shift(x: &PhasePoint, v: &PhaseVelocity, s: f64) -> Result<PhasePoint> {
    PhasePoint::new(&x.q + &v.dq * s, &x.p + &v.dp * s)
}

/// One classical RK4 step of size dt.
fn rk4_step(field: &PhaseField, x: &PhasePoint, dt: f64) -> Result<PhasePoint> {
    let k1 = field.evaluate(x)?;
    let k2 = field.evaluate(&shift(x, &k1, 0.5 * dt)?)?;
    let k3 = field.evaluate(&shift(x, &k2, 0.5 * dt)?)?;
    let k4 = field.evaluate(&shift(x, &k3, dt)?)?;
    let dq = (&k1.dq + &k2.dq * 2.0 + &k3.dq * 2.0 + &k4.dq) * (dt / 6.0);
    let dp = (&k1.dp + &k2.dp * 2.0 + &k3.dp * 2.0 + &k4.dp) * (dt / 6.0);
    PhasePoint::new(&x.q + dq, &x.p + dp)
}

/// Bisect the step size in (0, dt] from x0 until the oriented surface value
/// satisfies |f| < event_tolerance; returns the refined (step, point).
fn refine_hit(
    field: &PhaseField,
    x0: &PhasePoint,
    dt: f64,
    surface: &CriticalSurface,
    sigma: f64,
    config: &IntegrationConfig,
) -> Result<(f64, PhasePoint)> {
    let mut lo = 0.0;
    let mut hi = dt;
    let mut best = (dt, rk4_step(field, x0, dt)?);
    let mut best_abs = (sigma * surface.value(&best.1.q)).abs();
    for _ in 0..200 {
        if best_abs < config.event_tolerance {
            return Ok(best);
        }
        let mid = 0.5 * (lo + hi);
        let xm = rk4_step(field, x0, mid)?;
        let fm = sigma * surface.value(&xm.q);
        if fm.abs() < best_abs {
            best = (mid, xm.clone());
            best_abs = fm.abs();
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Integrate the field from `start` over [t0, t_end] with fixed-step RK4.
/// When a surface is supplied, the segment stops at the first crossing with
/// the hit point refined to |f| < event_tolerance; `side` orients f so the
/// integration region is f ≥ 0.
pub fn integrate(
    field: &PhaseField,
    start: &PhasePoint,
    t0: f64,
    t_end: f64,
    surface: Option<&CriticalSurface>,
    side: Side,
    config: &IntegrationConfig,
) -> Result<TrajectorySegment> {
    config.validate()?;
    if !(t_end.is_finite() && t0.is_finite()) || t_end < t0 {
        return Err(Error::InvalidConfig(format!(
            "integration span [{t0}, {t_end}] is invalid"
        )));
    }
    let sigma = side.sign();
    let mut armed = false;
    if let Some(surf) = surface {
        let f0 = sigma * surf.value(&start.q);
        if f0 < -config.event_tolerance {
            return Err(Error::InvalidConfig(format!(
                "start lies on the wrong side of the surface (oriented f = {f0:e})"
            )));
        }
        armed = f0 > config.event_tolerance;
    }
    let mut times = vec![t0];
    let mut states = vec![start.clone()];
    let mut t = t0;
    let mut x = start.clone();
    let mut steps = 0usize;
    let span_eps = 1e-12 * (t_end - t0).abs().max(1.0);
    while t < t_end - span_eps {
        if steps >= config.max_steps {
            return Ok(TrajectorySegment {
                times,
                states,
                terminal: TerminalCause::StepLimit,
            });
        }
        let dt = config.dt.min(t_end - t);
        let next = rk4_step(field, &x, dt)?;
        if let Some(surf) = surface {
            let f1 = sigma * surf.value(&next.q);
            if (armed && f1 <= 0.0) || f1 < -config.event_tolerance {
                let (hit_dt, hit) = refine_hit(field, &x, dt, surf, sigma, config)?;
                t += hit_dt;
                times.push(t);
                states.push(hit.clone());
                return Ok(TrajectorySegment {
                    times,
                    states,
                    terminal: TerminalCause::BoundaryHit { point: hit, side },
                });
            }
            if f1 > config.event_tolerance {
                armed = true;
            }
        }
        t += dt;
        x = next;
        times.push(t);
        states.push(x.clone());
        steps += 1;
    }
    Ok(TrajectorySegment {
        times,
        states,
        terminal: TerminalCause::ReachedEnd,
    })
}

/// X^level(f) at z by recursion: level 1 is the exact directional derivative
/// d_qf(dq); higher levels are central differences of the previous level
/// along the field direction, with the step scaled to the local speed.
fn ladder(
    field: &PhaseField,
    surface: &CriticalSurface,
    sigma: f64,
    level: usize,
    z: &PhasePoint,
) -> Result<f64> {
    let vel = field.evaluate(z)?;
    if level <= 1 {
        return Ok(sigma * surface.gradient_at(&z.q).dot(&vel.dq));
    }
    let speed = (vel.dq.norm_squared() + vel.dp.norm_squared()).sqrt();
    if speed == 0.0 {
        // Equilibrium: every higher derivative along the flow vanishes.
        return Ok(0.0);
    }
    let s = LADDER_STEP / speed.max(1.0);
    let forward = ladder(field, surface, sigma, level - 1, &shift(z, &vel, s)?)?;
    let backward = ladder(field, surface, sigma, level - 1, &shift(z, &vel, -s)?)?;
    Ok((forward - backward) / (2.0 * s))
}

/// Classify a boundary point y (|f(q)| < event_tolerance) as in, out, or
/// trapping for the given field. `inside` orients f so the interior is the
/// region inside.sign()·f ≥ 0; the order-j decision examines X^{j+1}(f).
pub fn classify_boundary(
    field: &PhaseField,
    y: &PhasePoint,
    surface: &CriticalSurface,
    inside: Side,
    config: &IntegrationConfig,
) -> Result<BoundaryClass> {
    config.validate()?;
    let sigma = inside.sign();
    let f0 = surface.value(&y.q);
    if f0.abs() > config.event_tolerance.max(1e-9) {
        return Err(Error::InvalidConfig(format!(
            "classification point is off the surface (f = {f0:e})"
        )));
    }
    for order in 0..=config.max_tangency_order {
        let d = ladder(field, surface, sigma, order + 1, y)?;
        if d.abs() > config.boundary_order_tolerance {
            return Ok(if d > 0.0 {
                BoundaryClass::In { order }
            } else {
                BoundaryClass::Out { order }
            });
        }
    }
    Ok(BoundaryClass::Trapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::focusing_point;
    use crate::geometry::ConfigChart;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere_system(k2: f64) -> MechanicalSystem {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, k2, k2, k2]));
        MechanicalSystem::constant_metric(
            ConfigChart::new(vec!["x", "y", "q1", "q2", "q3"]).unwrap(),
            g,
        )
    }

    fn sphere_rolling(r: f64) -> AffineConstraintSet {
        AffineConstraintSet::linear(DMatrix::from_row_slice(
            2,
            5,
            &[1.0, 0.0, 0.0, -r, 0.0, 0.0, 1.0, r, 0.0, 0.0],
        ))
    }

    /// Curved 2-d metric with an analytic derivative for drift tests.
    fn curved_system() -> MechanicalSystem {
        let chart = ConfigChart::new(vec!["x", "y"]).unwrap();
        let sys = MechanicalSystem::new(
            chart,
            |q: &DVector<f64>| DMatrix::from_row_slice(2, 2, &[1.0 + q[1] * q[1], 0.0, 0.0, 1.0]),
            |_| 0.0,
        );
        sys.with_metric_derivative(|q: &DVector<f64>| {
            vec![
                DMatrix::zeros(2, 2),
                DMatrix::from_row_slice(2, 2, &[2.0 * q[1], 0.0, 0.0, 0.0]),
            ]
        })
    }

    #[test]
    fn free_field_flat_particle() {
        let sys = MechanicalSystem::euclidean(ConfigChart::numbered(2));
        let x = PhasePoint::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let vel = free_field(&sys, &x).unwrap();
        assert_abs_diff_eq!(vel.dq[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vel.dq[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vel.dp.amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn free_field_linear_potential() {
        let sys = MechanicalSystem::euclidean(ConfigChart::numbered(2))
            .with_potential(|q: &DVector<f64>| q[0]);
        let x = PhasePoint::from_slices(&[0.3, -0.2], &[0.0, 0.4]).unwrap();
        let vel = free_field(&sys, &x).unwrap();
        assert_abs_diff_eq!(vel.dp[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(vel.dp[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn free_field_matches_hamiltonian_gradient() {
        let sys = curved_system().with_potential(|q: &DVector<f64>| q[0] * q[0] + 0.5 * q[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let x = PhasePoint::new(
                DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
                DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
            let vel = free_field(&sys, &x).unwrap();
            // Oracle: dp = −∂H/∂q and dq = ∂H/∂p by finite differences.
            let p = x.p.clone();
            let sys_q = sys.clone();
            let grad_q = numdiff::gradient(
                |q| {
                    sys_q
                        .hamiltonian(&PhasePoint::new(q.clone(), p.clone()).unwrap())
                        .unwrap()
                },
                &x.q,
            );
            let q = x.q.clone();
            let sys_p = sys.clone();
            let grad_p = numdiff::gradient(
                |pp| {
                    sys_p
                        .hamiltonian(&PhasePoint::new(q.clone(), pp.clone()).unwrap())
                        .unwrap()
                },
                &x.p,
            );
            assert!((&vel.dp + grad_q).amax() < 1e-6);
            assert!((&vel.dq - grad_p).amax() < 1e-6);
        }
    }

    #[test]
    fn constrained_field_with_no_constraints_is_free() {
        let sys = curved_system();
        let set = AffineConstraintSet::empty();
        let x = PhasePoint::from_slices(&[0.2, 0.4], &[0.7, -0.3]).unwrap();
        let a = free_field(&sys, &x).unwrap();
        let b = constrained_field(&sys, &set, &x).unwrap();
        assert_abs_diff_eq!((a.dq - b.dq).amax(), 0.0);
        assert_abs_diff_eq!((a.dp - b.dp).amax(), 0.0);
    }

    #[test]
    fn rolling_sphere_straight_line_has_zero_reaction() {
        let sys = sphere_system(0.4);
        let set = sphere_rolling(1.0);
        // Rolling velocity: ẋ = rω_y, ẏ = −rω_x.
        let v = DVector::from_vec(vec![0.5, -0.2, 0.2, 0.5, 0.9]);
        let q = DVector::zeros(5);
        let p = sys.legendre(&q, &v).unwrap();
        let x = PhasePoint::new(q, p).unwrap();
        let vel = constrained_field(&sys, &set, &x).unwrap();
        assert!(vel.dp.amax() < 1e-9, "λ = 0 on straight rolling");
        assert!((vel.dq - v).amax() < 1e-12);
    }

    #[test]
    fn constrained_field_reaction_lies_in_row_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let chart = ConfigChart::numbered(3);
        let sys = MechanicalSystem::new(
            chart,
            |q: &DVector<f64>| {
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        1.0 + 0.2 * q[2] * q[2],
                        0.1,
                        0.0,
                        0.1,
                        1.5,
                        0.0,
                        0.0,
                        0.0,
                        2.0,
                    ],
                )
            },
            |q: &DVector<f64>| 0.3 * q[0] * q[1],
        );
        let set = AffineConstraintSet::new(
            1,
            |q: &DVector<f64>| {
                DMatrix::from_row_slice(1, 3, &[1.0 + 0.3 * (q[1]).sin(), q[2], 1.0])
            },
            |q: &DVector<f64>| DVector::from_vec(vec![0.2 * (q[0]).cos()]),
        );
        for _ in 0..25 {
            let q = DVector::from_fn(3, |_, _| rng.gen_range(-0.8..0.8));
            let p_raw = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let u = PhasePoint::new(q, p_raw).unwrap();
            let x = focusing_point(&sys, &set, &u).unwrap();
            let free = free_field(&sys, &x).unwrap();
            let full = constrained_field(&sys, &set, &x).unwrap();
            let reaction = &full.dp - &free.dp;
            let j = set.rows_at(&x.q).unwrap();
            // Least-squares fit of reaction = Jᵗλ must be exact.
            let lambda = j
                .transpose()
                .svd(true, true)
                .solve(&reaction, 1e-13)
                .unwrap();
            let fit = j.transpose() * lambda;
            assert!((fit - &reaction).amax() < 1e-9);
            assert!((&full.dq - &free.dq).amax() < 1e-14);
        }
    }

    #[test]
    fn constrained_field_preserves_residual_to_first_order() {
        let sys = sphere_system(0.4);
        let set = sphere_rolling(1.0);
        let v = DVector::from_vec(vec![0.5, -0.2, 0.2, 0.5, 0.9]);
        let q = DVector::zeros(5);
        let p = sys.legendre(&q, &v).unwrap();
        let x = PhasePoint::new(q, p).unwrap();
        let field = PhaseField::Constrained(&sys, &set);
        let step = rk4_step(&field, &x, 1e-3).unwrap();
        let res = residual_at(&sys, &set, &step.q, &step.p).unwrap();
        assert!(res.amax() < 1e-12, "residual growth after one step");
    }

    #[test]
    fn constrained_residual_stays_small_with_curved_rows() {
        let chart = ConfigChart::numbered(3);
        let sys = MechanicalSystem::euclidean(chart)
            .with_potential(|q: &DVector<f64>| 0.5 * q.dot(q));
        let set = AffineConstraintSet::new(
            1,
            |q: &DVector<f64>| DMatrix::from_row_slice(1, 3, &[1.0, 0.4 * q[0], -1.0]),
            |_q: &DVector<f64>| DVector::from_vec(vec![0.1]),
        );
        let u = PhasePoint::from_slices(&[0.2, -0.1, 0.3], &[0.5, 0.4, -0.2]).unwrap();
        let x = focusing_point(&sys, &set, &u).unwrap();
        let field = PhaseField::Constrained(&sys, &set);
        let seg = integrate(
            &field,
            &x,
            0.0,
            1.0,
            None,
            Side::Plus,
            &IntegrationConfig::default(),
        )
        .unwrap();
        let end = seg.last_state();
        let res = residual_at(&sys, &set, &end.q, &end.p).unwrap();
        assert!(res.amax() < 1e-7, "drift over 10³ steps: {}", res.amax());
    }

    #[test]
    fn free_energy_drift_curved_metric() {
        let sys = curved_system();
        let x = PhasePoint::from_slices(&[0.0, 0.2], &[0.9, -0.4]).unwrap();
        let h0 = sys.hamiltonian(&x).unwrap();
        let field = PhaseField::Free(&sys);
        let seg = integrate(
            &field,
            &x,
            0.0,
            10.0,
            None,
            Side::Plus,
            &IntegrationConfig::default(),
        )
        .unwrap();
        assert_eq!(seg.len(), 10_001);
        let h1 = sys.hamiltonian(seg.last_state()).unwrap();
        assert!(((h1 - h0) / h0).abs() < 1e-8, "relative drift over 10⁴ steps");
    }

    #[test]
    fn constrained_energy_drift_linear_constraints() {
        let sys = sphere_system(0.4).with_potential(|q: &DVector<f64>| 0.7 * q[0]);
        let set = sphere_rolling(1.0);
        let v = DVector::from_vec(vec![0.5, -0.2, 0.2, 0.5, 0.9]);
        let q = DVector::zeros(5);
        let p = sys.legendre(&q, &v).unwrap();
        let x = PhasePoint::new(q, p).unwrap();
        let h0 = sys.hamiltonian(&x).unwrap();
        let field = PhaseField::Constrained(&sys, &set);
        let seg = integrate(
            &field,
            &x,
            0.0,
            1.0,
            None,
            Side::Plus,
            &IntegrationConfig::default(),
        )
        .unwrap();
        let h1 = sys.hamiltonian(seg.last_state()).unwrap();
        assert!(
            ((h1 - h0) / h0.abs().max(1.0)).abs() < 1e-7,
            "reaction does no work on linear constraints"
        );
    }

    #[test]
    fn integrate_hits_wall_at_expected_time() {
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap());
        let x = PhasePoint::from_slices(&[0.0], &[1.0]).unwrap();
        let surface = CriticalSurface::new(|q: &DVector<f64>| 1.0 - q[0]);
        let field = PhaseField::Free(&sys);
        let seg = integrate(
            &field,
            &x,
            0.0,
            5.0,
            Some(&surface),
            Side::Plus,
            &IntegrationConfig::default(),
        )
        .unwrap();
        match &seg.terminal {
            TerminalCause::BoundaryHit { point, side } => {
                assert_eq!(*side, Side::Plus);
                assert!((seg.last_time() - 1.0).abs() < 1e-6);
                assert!((1.0 - point.q[0]).abs() < 1e-10, "|f| under tolerance");
            }
            other => panic!("expected boundary hit, got {other:?}"),
        }
    }

    #[test]
    fn integrate_reaches_end_without_surface_crossing() {
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap());
        let x = PhasePoint::from_slices(&[0.0], &[-1.0]).unwrap();
        let surface = CriticalSurface::new(|q: &DVector<f64>| 1.0 - q[0]);
        let field = PhaseField::Free(&sys);
        let seg = integrate(
            &field,
            &x,
            0.0,
            0.5,
            Some(&surface),
            Side::Plus,
            &IntegrationConfig::default(),
        )
        .unwrap();
        assert!(matches!(seg.terminal, TerminalCause::ReachedEnd));
        assert_abs_diff_eq!(seg.last_time(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn integrate_respects_step_limit() {
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap());
        let x = PhasePoint::from_slices(&[0.0], &[1.0]).unwrap();
        let field = PhaseField::Free(&sys);
        let config = IntegrationConfig {
            max_steps: 10,
            ..IntegrationConfig::default()
        };
        let seg = integrate(&field, &x, 0.0, 5.0, None, Side::Plus, &config).unwrap();
        assert!(matches!(seg.terminal, TerminalCause::StepLimit));
        assert_eq!(seg.len(), 11);
    }

    #[test]
    fn integrate_rejects_wrong_side_start() {
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap());
        let x = PhasePoint::from_slices(&[2.0], &[1.0]).unwrap();
        let surface = CriticalSurface::new(|q: &DVector<f64>| 1.0 - q[0]);
        let field = PhaseField::Free(&sys);
        let out = integrate(
            &field,
            &x,
            0.0,
            5.0,
            Some(&surface),
            Side::Plus,
            &IntegrationConfig::default(),
        );
        assert!(matches!(out, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn classify_order_zero_matches_momentum_sign() {
        // Inside is x < 0 via f = −x oriented with Side::Plus.
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap());
        let surface = CriticalSurface::new(|q: &DVector<f64>| -q[0]);
        let field = PhaseField::Free(&sys);
        let config = IntegrationConfig::default();
        let out_point = PhasePoint::from_slices(&[0.0], &[1.0]).unwrap();
        assert_eq!(
            classify_boundary(&field, &out_point, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::Out { order: 0 }
        );
        let in_point = PhasePoint::from_slices(&[0.0], &[-1.0]).unwrap();
        assert_eq!(
            classify_boundary(&field, &in_point, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::In { order: 0 }
        );
    }

    #[test]
    fn classify_first_order_through_potential_force() {
        let surface = CriticalSurface::new(|q: &DVector<f64>| -q[0]);
        let config = IntegrationConfig::default();
        let y = PhasePoint::from_slices(&[0.0], &[0.0]).unwrap();
        // V = x pushes inward (force −1): X(f)=0, X²(f)=1 → in at order 1.
        let sys_in = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap())
            .with_potential(|q: &DVector<f64>| q[0]);
        let field_in = PhaseField::Free(&sys_in);
        assert_eq!(
            classify_boundary(&field_in, &y, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::In { order: 1 }
        );
        // V = −x pushes outward → out at order 1.
        let sys_out = MechanicalSystem::euclidean(ConfigChart::new(vec!["x"]).unwrap())
            .with_potential(|q: &DVector<f64>| -q[0]);
        let field_out = PhaseField::Free(&sys_out);
        assert_eq!(
            classify_boundary(&field_out, &y, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::Out { order: 1 }
        );
    }

    #[test]
    fn classify_second_order_through_transverse_momentum() {
        // V = x·y at y = 0: X(f) = −p_x = 0, X²(f) = y = 0, X³(f) = ẏ = p_y.
        let surface = CriticalSurface::new(|q: &DVector<f64>| -q[0]);
        let config = IntegrationConfig::default();
        let sys = MechanicalSystem::euclidean(ConfigChart::new(vec!["x", "y"]).unwrap())
            .with_potential(|q: &DVector<f64>| q[0] * q[1]);
        let field = PhaseField::Free(&sys);
        let up = PhasePoint::from_slices(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(
            classify_boundary(&field, &up, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::In { order: 2 }
        );
        let down = PhasePoint::from_slices(&[0.0, 0.0], &[0.0, -1.0]).unwrap();
        assert_eq!(
            classify_boundary(&field, &down, &surface, Side::Plus, &config).unwrap(),
            BoundaryClass::Out { order: 2 }
        );
    }

    #[test]
    fn classify_sphere_zero_normal_momentum_is_trapping() {
        let sys = sphere_system(0.4);
        let set = sphere_rolling(1.0);
        let surface = CriticalSurface::new(|q: &DVector<f64>| -q[0]);
        let field = PhaseField::Constrained(&sys, &set);
        // Rolling with ẋ = 0 at x = 0: stays on the surface forever.
        let v = DVector::from_vec(vec![0.0, 0.7, -0.7, 0.0, 0.3]);
        let q = DVector::zeros(5);
        let p = sys.legendre(&q, &v).unwrap();
        let y = PhasePoint::new(q, p).unwrap();
        assert_eq!(
            classify_boundary(&field, &y, &surface, Side::Plus, &IntegrationConfig::default())
                .unwrap(),
            BoundaryClass::Trapping
        );
    }

    #[test]
    fn classify_order_zero_equals_cometric_pairing_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let sys = sphere_system(0.4);
        let surface = CriticalSurface::new(|q: &DVector<f64>| -q[0]);
        let field = PhaseField::Free(&sys);
        let config = IntegrationConfig::default();
        for _ in 0..50 {
            let p = DVector::from_fn(5, |_, _| rng.gen_range(-2.0..2.0));
            let y = PhasePoint::new(DVector::zeros(5), p).unwrap();
            let df = surface.gradient_at(&y.q);
            let pairing = sys.cometric_inner(&y.q, &y.p, &df).unwrap();
            if pairing.abs() < 1e-3 {
                continue;
            }
            let class = classify_boundary(&field, &y, &surface, Side::Plus, &config).unwrap();
            if pairing > 0.0 {
                assert_eq!(class, BoundaryClass::In { order: 0 });
            } else {
                assert_eq!(class, BoundaryClass::Out { order: 0 });
            }
        }
    }
}
