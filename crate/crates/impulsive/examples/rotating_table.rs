//! A ball rolls across the seam between two rotating table halves.
//!
//! Each half of the table x < y and x > y spins about the origin at its own
//! rate, so the rolling constraints are affine: the contact velocity must
//! match the local table speed, which depends on position. Crossing the seam
//! swaps the affine offset. Whether the ball actually crosses is determined
//! by the sign of the normal rate after focusing onto the far side, and a
//! blow-back (focusing pushes the ball back into its old region) is resolved
//! by letting the new constraints follow the ball. Run with
//!
//! ```bash
//! cargo run --example rotating_table
//! ```

use impulsive::constraints::Side;
use impulsive::dynamics::{integrate, IntegrationConfig, PhaseField, TerminalCause};
use impulsive::impact::{transition, ImpactState, TransitionConfig};
use impulsive::scenarios::{self, table_normal_rate};

fn main() -> impulsive::Result<()> {
    let scenario = scenarios::by_name("rotating_table")?;
    println!("{}: {}", scenario.name, scenario.description);
    for (name, value) in &scenario.params {
        println!("  {name} = {value}");
    }
    let (r, k2) = (scenario.params[0].1, scenario.params[1].1);
    let (om, op) = (scenario.params[2].1, scenario.params[3].1);

    // Roll from the slow half toward the seam.
    let data = scenario.system.side_data(scenario.side)?;
    let field = PhaseField::Constrained(&data.system, &data.constraints);
    let segment = integrate(
        &field,
        &scenario.initial,
        0.0,
        5.0,
        Some(scenario.system.surface()),
        scenario.side,
        &IntegrationConfig::default(),
    )?;
    let t_hit = segment.last_time();
    let impact_point = match segment.terminal {
        TerminalCause::BoundaryHit { point, .. } => point,
        other => panic!("expected a seam crossing, got {other:?}"),
    };
    let (x, y) = (impact_point.q[0], impact_point.q[1]);
    println!(
        "\nseam reached at t = {:.6}, (x, y) = ({x:.6}, {y:.6})",
        t_hit
    );

    // The crossing character is decided by the normal rate after focusing
    // onto the far side's affine fiber; its closed form depends only on the
    // seam point and the momentum.
    let rate = table_normal_rate(
        r,
        k2,
        om,
        op,
        x,
        y,
        impact_point.p[0],
        impact_point.p[1],
    );
    println!("normal rate after focusing = {rate:+.6}");
    println!("  (positive: crosses into the plus half; negative: blown back)");

    let impact = ImpactState::new(&scenario.system, impact_point, scenario.side)?;
    let result = transition(&scenario.system, &impact, &TransitionConfig::default())?;
    for branch in &result.branches {
        println!(
            "branch: side {}, region {}, {} dynamics, classified {}",
            branch.side.name(),
            branch.region.name(),
            branch.tag,
            branch.classification
        );
    }

    // A seam point farther out gets blown back: focusing onto the fast
    // side's fiber reverses the normal rate. With the constraints following
    // the transition the ball returns into its old region but keeps the new
    // affine constraint set (a genuine crossing of constraint regimes).
    let s = 2.0;
    let q = nalgebra::DVector::from_vec(vec![s, s, 0.0, 0.0, 0.0]);
    // Build a seam state consistent with the minus-side constraints: choose
    // planar momentum and solve the two rolling rows for the spin momenta.
    let (px, py) = (1.0, 0.0);
    let mut p = nalgebra::DVector::zeros(5);
    p[0] = px;
    p[1] = py;
    p[2] = k2 * (om * s - py) / r;
    p[3] = k2 * (px + om * s) / r;
    let far = impulsive::PhasePoint::new(q, p)?;
    let rate = table_normal_rate(r, k2, om, op, s, s, px, py);
    println!("\nseam point at s = {s}: normal rate after focusing = {rate:+.6}");
    let impact = ImpactState::new(&scenario.system, far, Side::Minus)?;
    let result = transition(&scenario.system, &impact, &TransitionConfig::default())?;
    for branch in &result.branches {
        println!(
            "branch: side {} (constraints), region {} (motion), classified {}",
            branch.side.name(),
            branch.region.name(),
            branch.classification
        );
    }
    Ok(())
}
