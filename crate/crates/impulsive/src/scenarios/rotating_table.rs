//! A ball rolling without sliding on a table split along the diagonal
//! x = y into two parts rotating with angular velocities Ω₋ < Ω₊ about the
//! origin. The rolling conditions pick up configuration-dependent affine
//! offsets (ẋ − r·ω_y = −Ω y, ẏ + r·ω_x = Ω x), so crossing the seam is a
//! constraint-change impact between two affine fibers over the same point.
//! After a crossing the new side's constraint set stays in force no matter
//! where the ball continues, so `constraints_follow_transition` is on.

use nalgebra::DVector;

use super::{ball_system, check_ball_params, rolling_rows, Scenario};
use crate::constraints::{AffineConstraintSet, CriticalSurface, Side};
use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::impact::{DiscontinuousSystem, ImpactMode, SideData};

/// Ball of radius r and gyration k² on a table whose half {x < y} rotates at
/// omega_minus and whose half {x > y} rotates at omega_plus.
pub fn rotating_table(r: f64, k2: f64, omega_minus: f64, omega_plus: f64) -> Result<Scenario> {
    check_ball_params(r, k2)?;
    if !(omega_minus.is_finite() && omega_plus.is_finite() && omega_minus < omega_plus) {
        return Err(Error::InvalidConfig(format!(
            "table speeds must be finite with omega_minus < omega_plus, got {omega_minus}, {omega_plus}"
        )));
    }
    let sys = ball_system(k2);
    let table_side = |omega: f64| {
        AffineConstraintSet::new(
            2,
            move |_: &DVector<f64>| rolling_rows(r),
            move |q: &DVector<f64>| DVector::from_vec(vec![omega * q[1], -omega * q[0]]),
        )
    };
    let surface = CriticalSurface::with_gradient(
        |q: &DVector<f64>| q[0] - q[1],
        |q: &DVector<f64>| {
            let mut g = DVector::zeros(q.len());
            g[0] = 1.0;
            g[1] = -1.0;
            g
        },
    );
    let minus = SideData::new(sys.clone(), table_side(omega_minus));
    let plus = SideData::new(sys, table_side(omega_plus));
    let system = DiscontinuousSystem::new(surface, Some(minus), Some(plus), ImpactMode::Elastic)?
        .with_constraints_follow_transition(true);
    // Start just inside {x < y} with contact velocity (1, 0) on the slow side.
    let (x0, y0) = (-1.1, -0.9);
    let (vx, vy) = (1.0, 0.0);
    let omega_x = (omega_minus * x0 - vy) / r;
    let omega_y = (vx + omega_minus * y0) / r;
    let q0 = DVector::from_vec(vec![x0, y0, 0.0, 0.0, 0.0]);
    let p0 = DVector::from_vec(vec![vx, vy, k2 * omega_x, k2 * omega_y, 0.0]);
    let scale = k2 / (r * r + k2);
    Ok(Scenario {
        name: "rotating_table",
        description: "rolling ball crosses the seam between two table speeds",
        params: vec![
            ("r", r),
            ("k2", k2),
            ("omega_minus", omega_minus),
            ("omega_plus", omega_plus),
        ],
        system,
        initial: PhasePoint::new(q0, p0)?,
        side: Side::Minus,
        reference_values: vec![
            ("offset_scale_minus", scale * omega_minus),
            ("offset_scale_plus", scale * omega_plus),
            (
                "normal_rate_at_reference",
                table_normal_rate(r, k2, omega_minus, omega_plus, 1.0, 1.0, 1.0, 0.0),
            ),
        ],
    })
}

/// Affine focusing offset of the table side spinning at omega, evaluated at
/// the configuration q: the momentum every fiber point shares beyond its
/// projected part.
pub fn table_offset_momentum(r: f64, k2: f64, omega: f64, q: &DVector<f64>) -> DVector<f64> {
    let c = k2 * omega / (r * r + k2);
    DVector::from_vec(vec![
        -c * q[1],
        c * q[0],
        c * q[0] * r,
        c * q[1] * r,
        0.0,
    ])
}

/// Surface rate 𝒢(d(x−y), ·) of the plus-side focusing of a minus-side
/// arrival state with planar momenta (px0, py0) at the seam point
/// (x0, y0 = x0): positive means the focused point enters {x > y}.
#[allow(clippy::too_many_arguments)]
pub fn table_normal_rate(
    r: f64,
    k2: f64,
    omega_minus: f64,
    omega_plus: f64,
    x0: f64,
    y0: f64,
    px0: f64,
    py0: f64,
) -> f64 {
    px0 - py0 + k2 / (r * r + k2) * (x0 + y0) * (omega_minus - omega_plus)
}
