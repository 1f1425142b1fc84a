//! Shared oracles for the integration suites: random problem generators and
//! independent reference computations that avoid the library's own
//! projector-based code paths.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use impulsive::constraints::{AffineConstraintSet, CriticalSurface};
use impulsive::geometry::{ConfigChart, MechanicalSystem};

/// Random symmetric positive-definite matrix with a bounded condition
/// number: R Rt plus a diagonal shift.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &r * r.transpose() + DMatrix::identity(n, n) * (0.5 + rng.gen_range(0.0..1.0))
}

/// Random full-rank constraint matrix with m rows; resamples until the
/// smallest singular value is comfortably away from zero.
pub fn random_rows<R: Rng>(rng: &mut R, m: usize, n: usize) -> DMatrix<f64> {
    if m == 0 {
        return DMatrix::zeros(0, n);
    }
    loop {
        let j = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let smallest = j
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if smallest > 1e-2 {
            return j;
        }
    }
}

/// Chart with coordinates q1..qn.
pub fn chart(n: usize) -> ConfigChart {
    ConfigChart::new((1..=n).map(|i| format!("q{i}")).collect()).expect("valid chart")
}

/// Constant-metric system with zero potential on a generic n-chart.
pub fn constant_system(g: DMatrix<f64>) -> MechanicalSystem {
    let n = g.nrows();
    MechanicalSystem::constant_metric(chart(n), g)
}

/// Independent focusing oracle: minimize the kinetic-energy distance
/// (p - u)t G (p - u) / 2 subject to J G p + mu = 0, solved as one dense KKT
/// system with LU instead of the library's projector algebra.
pub fn kkt_focus(
    cometric: &DMatrix<f64>,
    rows: &DMatrix<f64>,
    offset: &DVector<f64>,
    u: &DVector<f64>,
) -> DVector<f64> {
    let n = cometric.nrows();
    let m = rows.nrows();
    let a = rows * cometric;
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(cometric);
    kkt.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(&a);
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(cometric * u));
    rhs.rows_mut(n, m).copy_from(&(-offset));
    let solution = kkt.lu().solve(&rhs).expect("KKT system is invertible");
    solution.rows(0, n).into_owned()
}

/// Independent quadratic-root oracle: fit the energy mismatch
/// c -> H_far(p + c d) - h_target through three samples and solve the
/// quadratic with the numerically stable formula. Returns sorted real roots
/// (empty when the discriminant is negative).
pub fn energy_level_roots<F>(mismatch: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let phi0 = mismatch(0.0);
    let phi_plus = mismatch(1.0);
    let phi_minus = mismatch(-1.0);
    let alpha = 0.5 * (phi_plus + phi_minus) - phi0;
    let beta = 0.5 * (phi_plus - phi_minus);
    let gamma = phi0;
    let disc = beta * beta - 4.0 * alpha * gamma;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (beta + beta.signum() * sq);
    let mut roots = if q.abs() < 1e-300 {
        vec![0.0, 0.0]
    } else {
        vec![q / alpha, gamma / q]
    };
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots
}

/// Surface f = q1 - level with analytic gradient, shared by random-instance
/// suites.
pub fn coordinate_surface(level: f64) -> CriticalSurface {
    CriticalSurface::with_gradient(
        move |q: &DVector<f64>| q[0] - level,
        move |q: &DVector<f64>| {
            let mut grad = DVector::zeros(q.len());
            grad[0] = 1.0;
            grad
        },
    )
}

/// Random linear constraint set (zero offsets).
pub fn random_linear_constraints<R: Rng>(
    rng: &mut R,
    m: usize,
    n: usize,
) -> AffineConstraintSet {
    AffineConstraintSet::linear(random_rows(rng, m, n))
}

/// Random affine constraint set with constant rows and offsets.
pub fn random_affine_constraints<R: Rng>(
    rng: &mut R,
    m: usize,
    n: usize,
) -> AffineConstraintSet {
    let rows = random_rows(rng, m, n);
    let offset = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    AffineConstraintSet::constant(rows, offset)
}
