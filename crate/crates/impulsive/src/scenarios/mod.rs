//! Ready-made discontinuous systems with known closed-form behavior, each
//! bundled with the reference constants its regression tests pin. All four
//! are built from the generic machinery; the closed-form helpers exist only
//! as independent cross-checks.

mod rolling_sphere;
mod rotating_table;
mod sphere_wall;
mod two_wheeled;

pub use rolling_sphere::{rolling_projector, rolling_sphere_rough, rolling_update};
pub use rotating_table::{rotating_table, table_normal_rate, table_offset_momentum};
pub use sphere_wall::{contact_update, sphere_wall, wall_reflection_coefficient};
pub use two_wheeled::{two_wheeled, wheel_projector};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ConfigChart, MechanicalSystem, PhasePoint};
use crate::impact::DiscontinuousSystem;
use crate::constraints::Side;

/// A named discontinuous system with a default initial condition and the
/// constants regression tests compare the generic machinery against.
#[derive(Clone, Debug)]
pub struct Scenario {
    /// CLI-addressable name.
    pub name: &'static str,
    /// One-line physical description.
    pub description: &'static str,
    /// Builder parameters as name-value pairs.
    pub params: Vec<(&'static str, f64)>,
    /// The constructed two-sided system.
    pub system: DiscontinuousSystem,
    /// Default initial phase point (off the surface, moving toward it).
    pub initial: PhasePoint,
    /// Side the default initial point lives on.
    pub side: Side,
    /// Named constants from the closed-form reference formulas.
    pub reference_values: Vec<(&'static str, f64)>,
}

/// Names addressable from the command line, in presentation order.
pub const SCENARIO_NAMES: [&str; 4] = [
    "rolling_sphere_rough",
    "sphere_wall",
    "rotating_table",
    "two_wheeled",
];

/// Builds the named scenario with its default parameters.
pub fn by_name(name: &str) -> Result<Scenario> {
    match name {
        "rolling_sphere_rough" => rolling_sphere_rough(1.0, 0.4),
        "sphere_wall" => sphere_wall(1.0, 0.4, 1.0),
        "rotating_table" => rotating_table(1.0, 0.4, 1.0, 2.0),
        "two_wheeled" => two_wheeled(1.0, 2.0, 1.5, 2.5),
        other => Err(Error::InvalidConfig(format!(
            "unknown scenario {other:?}; available: {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

/// Chart of a ball on a plane: contact coordinates (x, y) and quasi-angles
/// (q1, q2, q3) about the coordinate axes.
pub fn ball_chart() -> ConfigChart {
    ConfigChart::new(vec!["x", "y", "q1", "q2", "q3"]).expect("static names")
}

/// Kinetic metric of a unit-mass ball with gyration radius k (k² = 2/5 for a
/// homogeneous sphere): diag(1, 1, k², k², k²).
pub fn ball_metric(k2: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, k2, k2, k2]))
}

/// Rolling-without-sliding rows for a ball of radius r on the plane, in the
/// (x, y, q1, q2, q3) ordering: ẋ = r·ω_y, ẏ = −r·ω_x.
pub fn rolling_rows(r: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        5,
        &[1.0, 0.0, 0.0, -r, 0.0, 0.0, 1.0, r, 0.0, 0.0],
    )
}

/// The ball system shared by the sphere scenarios.
pub(crate) fn ball_system(k2: f64) -> MechanicalSystem {
    MechanicalSystem::constant_metric(ball_chart(), ball_metric(k2))
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

pub(crate) fn check_ball_params(r: f64, k2: f64) -> Result<()> {
    positive("radius r", r)?;
    positive("gyration k2", k2)
}
