//! A planar vehicle made of two wheels of radii r₁ < r₂ rolling on the line,
//! their centers joined by a telescoping link whose length ℓ must stay
//! between a and b. The configuration space is (x₁, x₂, θ₁, θ₂) with unit
//! masses and inertias; the boundary sheets {ℓ = a} and {ℓ = b} form one
//! critical surface f = (b − ℓ)(ℓ − a), positive inside. On a sheet the
//! trace condition ℓ̇ = 0 reads ẋ₁ = ẋ₂, so an inelastic impact locks the
//! link without any separately declared contact rows.

use nalgebra::{DMatrix, DVector};

use super::Scenario;
use crate::constraints::{AffineConstraintSet, CriticalSurface, Side};
use crate::error::{Error, Result};
use crate::geometry::{ConfigChart, MechanicalSystem, PhasePoint};
use crate::impact::{DiscontinuousSystem, ImpactMode, SideData};

/// Link length for wheel radii (r1, r2) at horizontal separation x2 − x1.
fn link_length(r1: f64, r2: f64, dx: f64) -> f64 {
    ((r2 - r1).powi(2) + dx * dx).sqrt()
}

/// Two rolling wheels with link length confined to [a, b].
pub fn two_wheeled(r1: f64, r2: f64, a: f64, b: f64) -> Result<Scenario> {
    if !(0.0 < r1 && r1 < r2 && r2.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "wheel radii must satisfy 0 < r1 < r2, got {r1}, {r2}"
        )));
    }
    if !(0.0 < a && a < b && b.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "link bounds must satisfy 0 < a < b, got {a}, {b}"
        )));
    }
    let mid = 0.5 * (a + b);
    if mid <= r2 - r1 {
        return Err(Error::InvalidConfig(format!(
            "link band [{a}, {b}] is unreachable for radius gap {}",
            r2 - r1
        )));
    }
    let chart = ConfigChart::new(vec!["x1", "x2", "th1", "th2"])?;
    let sys = MechanicalSystem::euclidean(chart);
    let rows = DMatrix::from_row_slice(
        2,
        4,
        &[1.0, 0.0, -r1, 0.0, 0.0, 1.0, 0.0, -r2],
    );
    let inside = SideData::new(sys, AffineConstraintSet::linear(rows));
    let surface = CriticalSurface::with_gradient(
        move |q: &DVector<f64>| {
            let l = link_length(r1, r2, q[1] - q[0]);
            (b - l) * (l - a)
        },
        move |q: &DVector<f64>| {
            let dx = q[1] - q[0];
            let l = link_length(r1, r2, dx);
            let slope = (a + b - 2.0 * l) * dx / l;
            DVector::from_vec(vec![-slope, slope, 0.0, 0.0])
        },
    );
    let system = DiscontinuousSystem::new(surface, None, Some(inside), ImpactMode::Elastic)?;
    // Start at mid-length with the far wheel rolling away at unit speed.
    let sep0 = (mid * mid - (r2 - r1).powi(2)).sqrt();
    let q0 = DVector::from_vec(vec![0.0, sep0, 0.0, 0.0]);
    let p0 = DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0 / r2]);
    let (d1, d2) = (1.0 + r1 * r1, 1.0 + r2 * r2);
    Ok(Scenario {
        name: "two_wheeled",
        description: "two linked rolling wheels hit the link-length bound",
        params: vec![("r1", r1), ("r2", r2), ("a", a), ("b", b)],
        system,
        initial: PhasePoint::new(q0, p0)?,
        side: Side::Plus,
        reference_values: vec![
            ("wheel1_retention", r1 * r1 / d1),
            ("wheel2_retention", r2 * r2 / d2),
            ("wheel1_coupling", r1 / d1),
            ("wheel2_coupling", r2 / d2),
        ],
    })
}

/// Momentum projector onto the rolling fiber directions in the
/// (x1, x2, th1, th2) ordering. Closed form for cross-checking the generic
/// projection machinery.
pub fn wheel_projector(r1: f64, r2: f64) -> DMatrix<f64> {
    let (d1, d2) = (1.0 + r1 * r1, 1.0 + r2 * r2);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            r1 * r1 / d1, 0.0, r1 / d1, 0.0, //
            0.0, r2 * r2 / d2, 0.0, r2 / d2, //
            r1 / d1, 0.0, 1.0 / d1, 0.0, //
            0.0, r2 / d2, 0.0, 1.0 / d2,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::compatibility;
    use crate::dynamics::BoundaryClass;
    use crate::impact::{transition, DynamicsTag, ImpactState, TransitionConfig};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DEFAULTS: (f64, f64, f64, f64) = (1.0, 2.0, 1.5, 2.5);

    /// Rolling arrival state on the sheet ℓ = b moving outward.
    fn outer_sheet_arrival(r1: f64, r2: f64, b: f64, v1: f64, v2: f64) -> PhasePoint {
        let sep = (b * b - (r2 - r1).powi(2)).sqrt();
        PhasePoint::new(
            DVector::from_vec(vec![0.0, sep, 0.0, 0.0]),
            DVector::from_vec(vec![v1, v2, v1 / r1, v2 / r2]),
        )
        .unwrap()
    }

    #[test]
    fn projector_formula_matches_machinery() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for _ in 0..20 {
            let r1 = rng.gen_range(0.3..1.5);
            let r2 = r1 + rng.gen_range(0.2..2.0);
            let scenario = two_wheeled(r1, r2, 1.5, 2.5);
            let scenario = match scenario {
                Ok(s) => s,
                Err(_) => continue, // band unreachable for this radius gap
            };
            let data = scenario.system.side_data(Side::Plus).unwrap();
            let comp =
                compatibility(&data.system, &data.constraints, &scenario.initial.q).unwrap();
            assert!((comp.p_matrix() - wheel_projector(r1, r2)).amax() < 1e-12);
        }
    }

    #[test]
    fn projector_displayed_entries_at_reference_radii() {
        let p = wheel_projector(1.0, 2.0);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.0, 0.5, 0.0, //
                0.0, 0.8, 0.0, 0.4, //
                0.5, 0.0, 0.5, 0.0, //
                0.0, 0.4, 0.0, 0.2,
            ],
        );
        assert!((p - expected).amax() < 1e-12);
    }

    #[test]
    fn elastic_impact_reflects_along_the_projected_gradient() {
        let (r1, r2, a, b) = DEFAULTS;
        let scenario = two_wheeled(r1, r2, a, b).unwrap();
        let y = outer_sheet_arrival(r1, r2, b, 0.0, 1.0);
        let impact = ImpactState::new(&scenario.system, y.clone(), Side::Plus).unwrap();
        let result = transition(&scenario.system, &impact, &TransitionConfig::default()).unwrap();
        assert_eq!(result.branches.len(), 1);
        let branch = &result.branches[0];
        assert_eq!(branch.side, Side::Plus);
        assert!(branch.classification.is_in());
        // Independent composite: reflect along the projected link gradient.
        let sep = y.q[1] - y.q[0];
        let dl = DVector::from_vec(vec![-sep / b, sep / b, 0.0, 0.0]);
        let pdl = wheel_projector(r1, r2) * dl;
        let c = -2.0 * y.p.dot(&pdl) / pdl.dot(&pdl);
        let expected = &y.p + pdl * c;
        assert!((&branch.point.p - expected).amax() < 1e-10);
        // Elastic reflection with linear constraints conserves energy.
        let data = scenario.system.side_data(Side::Plus).unwrap();
        let h0 = data.system.hamiltonian(&y).unwrap();
        let h1 = data.system.hamiltonian(&branch.point).unwrap();
        assert!((h1 - h0).abs() < 1e-10);
    }

    #[test]
    fn inelastic_impact_locks_the_link() {
        let (r1, r2, a, b) = DEFAULTS;
        let scenario = two_wheeled(r1, r2, a, b).unwrap();
        let dsys = scenario.system.with_mode(ImpactMode::Inelastic);
        let y = outer_sheet_arrival(r1, r2, b, 0.0, 1.0);
        let impact = ImpactState::new(&dsys, y.clone(), Side::Plus).unwrap();
        let result = transition(&dsys, &impact, &TransitionConfig::default()).unwrap();
        assert_eq!(result.branches.len(), 1, "all falling candidates merge");
        let branch = &result.branches[0];
        assert_eq!(branch.tag, DynamicsTag::Trace);
        assert_eq!(branch.classification, BoundaryClass::Trapping);
        // Locked link: equal wheel speeds, still rolling.
        let v = &branch.point.p;
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-10);
        // Independent oracle: Euclidean least squares onto the locked rows.
        let mut rows = DMatrix::zeros(3, 4);
        rows[(0, 0)] = 1.0;
        rows[(0, 2)] = -r1;
        rows[(1, 1)] = 1.0;
        rows[(1, 3)] = -r2;
        rows[(2, 0)] = 1.0;
        rows[(2, 1)] = -1.0;
        let gram = &rows * rows.transpose();
        let mult = gram.lu().solve(&(&rows * &y.p)).unwrap();
        let oracle = &y.p - rows.transpose() * mult;
        assert!((&branch.point.p - oracle).amax() < 1e-10);
        // Carnot: the lock can only lose kinetic energy.
        assert!(branch.point.p.norm_squared() <= y.p.norm_squared() + 1e-12);
    }

    #[test]
    fn band_unreachable_for_radius_gap_is_rejected() {
        assert!(matches!(
            two_wheeled(1.0, 5.0, 1.5, 2.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn default_initial_rolls_inside_the_band() {
        let (r1, r2, a, b) = DEFAULTS;
        let scenario = two_wheeled(r1, r2, a, b).unwrap();
        let f = scenario.system.surface().value(&scenario.initial.q);
        assert!(f > 0.0, "starts strictly inside");
        let data = scenario.system.side_data(Side::Plus).unwrap();
        let comp =
            compatibility(&data.system, &data.constraints, &scenario.initial.q).unwrap();
        assert!(comp.residual(&scenario.initial.p).amax() < 1e-12);
    }
}
