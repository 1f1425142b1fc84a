//! A ball on a plane that is smooth for x < 0 and absolutely rough for
//! x > 0: free motion on the minus side, rolling constraints on the plus
//! side, one shared Hamiltonian. Crossing x = 0 is an elastic
//! constraint-change impact.

use nalgebra::{DMatrix, DVector};

use super::{ball_system, check_ball_params, rolling_rows, Scenario};
use crate::constraints::{AffineConstraintSet, CriticalSurface, Side};
use crate::error::Result;
use crate::geometry::PhasePoint;
use crate::impact::{DiscontinuousSystem, ImpactMode, SideData};

/// Ball of radius r and gyration k² rolling onto a rough half-plane.
pub fn rolling_sphere_rough(r: f64, k2: f64) -> Result<Scenario> {
    check_ball_params(r, k2)?;
    let sys = ball_system(k2);
    let surface = CriticalSurface::with_gradient(
        |q: &DVector<f64>| q[0],
        |q: &DVector<f64>| {
            let mut g = DVector::zeros(q.len());
            g[0] = 1.0;
            g
        },
    );
    let minus = SideData::new(sys.clone(), AffineConstraintSet::empty());
    let plus = SideData::new(sys, AffineConstraintSet::linear(rolling_rows(r)));
    let system = DiscontinuousSystem::new(surface, Some(minus), Some(plus), ImpactMode::Elastic)?;
    let den = r * r + k2;
    Ok(Scenario {
        name: "rolling_sphere_rough",
        description: "ball slides across a smooth half-plane onto a rough one",
        params: vec![("r", r), ("k2", k2)],
        system,
        initial: PhasePoint::from_slices(
            &[-1.0, 0.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0, 0.0],
        )?,
        side: Side::Minus,
        reference_values: vec![
            ("planar_retention", r * r / den),
            ("angular_coupling", r * k2 / den),
        ],
    })
}

/// Momentum projector onto the rolling fiber directions, in the
/// (x, y, q1, q2, q3) ordering. Closed form for cross-checking the generic
/// projection machinery.
pub fn rolling_projector(r: f64, k2: f64) -> DMatrix<f64> {
    let den = r * r + k2;
    DMatrix::from_row_slice(
        5,
        5,
        &[
            r * r, 0.0, 0.0, r, 0.0, //
            0.0, r * r, -r, 0.0, 0.0, //
            0.0, -r * k2, k2, 0.0, 0.0, //
            r * k2, 0.0, 0.0, k2, 0.0, //
            0.0, 0.0, 0.0, 0.0, den,
        ],
    ) / den
}

/// Component-wise momentum update of the focusing onto the rolling fiber.
pub fn rolling_update(r: f64, k2: f64, p: &DVector<f64>) -> DVector<f64> {
    let den = r * r + k2;
    DVector::from_vec(vec![
        (r * r * p[0] + r * p[3]) / den,
        (r * r * p[1] - r * p[2]) / den,
        (-r * k2 * p[1] + k2 * p[2]) / den,
        (r * k2 * p[0] + k2 * p[3]) / den,
        p[4],
    ])
}
