//! Central finite differences for metric derivatives, potential gradients,
//! and constraint Jacobians.
//!
//! All helpers use the same step rule h = 1e-6 · max(1, ‖q‖∞) so that results
//! are scale-consistent across modules. Analytic derivatives, where supplied,
//! always take precedence over these fallbacks.

use nalgebra::{DMatrix, DVector};

/// Relative finite-difference step factor.
const STEP_FACTOR: f64 = 1e-6;

/// Finite-difference step for configurations near `q`: h = 1e-6 · max(1, ‖q‖∞).
pub fn step(q: &DVector<f64>) -> f64 {
    STEP_FACTOR * q.amax().max(1.0)
}

/// Central-difference gradient of a scalar function of the configuration.
pub fn gradient<F>(f: F, q: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let h = step(q);
    let n = q.len();
    let mut grad = DVector::zeros(n);
    let mut probe = q.clone();
    for a in 0..n {
        probe[a] = q[a] + h;
        let plus = f(&probe);
        probe[a] = q[a] - h;
        let minus = f(&probe);
        probe[a] = q[a];
        grad[a] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Central-difference Jacobian of a vector function of the configuration;
/// column a holds ∂f/∂q^a.
pub fn jacobian<F>(f: F, q: &DVector<f64>, rows: usize) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let h = step(q);
    let n = q.len();
    let mut jac = DMatrix::zeros(rows, n);
    let mut probe = q.clone();
    for a in 0..n {
        probe[a] = q[a] + h;
        let plus = f(&probe);
        probe[a] = q[a] - h;
        let minus = f(&probe);
        probe[a] = q[a];
        jac.set_column(a, &((plus - minus) / (2.0 * h)));
    }
    jac
}

/// Central-difference partial derivatives of a matrix function of the
/// configuration: returns [∂M/∂q^1, …, ∂M/∂q^n].
pub fn matrix_partials<F>(f: F, q: &DVector<f64>) -> Vec<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let h = step(q);
    let n = q.len();
    let mut partials = Vec::with_capacity(n);
    let mut probe = q.clone();
    for a in 0..n {
        probe[a] = q[a] + h;
        let plus = f(&probe);
        probe[a] = q[a] - h;
        let minus = f(&probe);
        probe[a] = q[a];
        partials.push((plus - minus) / (2.0 * h));
    }
    partials
}
