//! A ball rolling on a rough plane toward a rigid wall at x = d: the ball
//! occupies the minus side of f = x − d, the other side is absent, and the
//! moment of contact imposes the additional instantaneous no-slip row
//! ψ = ẏ − r·ω_z against the wall face.

use nalgebra::{DMatrix, DVector};

use super::{ball_system, check_ball_params, rolling_rows, Scenario};
use crate::constraints::{AffineConstraintSet, CriticalSurface, Side};
use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::impact::{DiscontinuousSystem, ImpactMode, SideData};

/// Rolling ball of radius r and gyration k² against a wall at x = d > 0.
pub fn sphere_wall(r: f64, k2: f64, d: f64) -> Result<Scenario> {
    check_ball_params(r, k2)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "wall position d must be positive and finite, got {d}"
        )));
    }
    let sys = ball_system(k2);
    let constraints = AffineConstraintSet::linear(rolling_rows(r));
    let mut inst_rows = DMatrix::zeros(3, 5);
    inst_rows
        .view_mut((0, 0), (2, 5))
        .copy_from(&rolling_rows(r));
    inst_rows
        .view_mut((2, 0), (1, 5))
        .copy_from(&DMatrix::from_row_slice(1, 5, &[0.0, 1.0, 0.0, 0.0, -r]));
    let ball = SideData::new(sys.clone(), constraints)
        .with_inst_constraints(AffineConstraintSet::linear(inst_rows));
    let surface = CriticalSurface::with_gradient(
        move |q: &DVector<f64>| q[0] - d,
        |q: &DVector<f64>| {
            let mut g = DVector::zeros(q.len());
            g[0] = 1.0;
            g
        },
    );
    let system = DiscontinuousSystem::new(surface, Some(ball), None, ImpactMode::Elastic)?;
    // Rolling arrival state: contact velocity (1, 0.5), spin 0.3.
    let (vx, vy, v3) = (1.0, 0.5, 0.3);
    let p0 = sys.legendre(
        &DVector::zeros(5),
        &DVector::from_vec(vec![vx, vy, -vy / r, vx / r, v3]),
    )?;
    Ok(Scenario {
        name: "sphere_wall",
        description: "rolling ball strikes a rigid wall with no-slip contact",
        params: vec![("r", r), ("k2", k2), ("d", d)],
        system,
        initial: PhasePoint::new(DVector::zeros(5), p0)?,
        side: Side::Minus,
        reference_values: vec![("reflection_per_unit_px", -2.0 * (r * r + k2) / (r * r))],
    })
}

/// Momentum update of the instantaneous contact projection (rolling rows
/// plus the wall no-slip row), valid for any pre-impact momentum.
pub fn contact_update(r: f64, k2: f64, p: &DVector<f64>) -> DVector<f64> {
    let planar = (r * p[0] + p[3]) / (r * r + k2);
    let lateral = (-r * p[1] + p[2] - p[4]) / (r * r + 2.0 * k2);
    DVector::from_vec(vec![
        planar * r,
        -lateral * r,
        lateral * k2,
        planar * k2,
        -lateral * k2,
    ])
}

/// Reflective coefficient of the wall impact for a rolling arrival state
/// with normal momentum px0: −2(r² + k²)/r² · (p_x)₀.
pub fn wall_reflection_coefficient(r: f64, k2: f64, px0: f64) -> f64 {
    -2.0 * (r * r + k2) / (r * r) * px0
}
