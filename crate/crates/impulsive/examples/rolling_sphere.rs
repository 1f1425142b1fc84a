//! A sliding ball crosses onto a rough half-plane and starts rolling.
//!
//! The ball slides freely on the smooth half x < 0 of a plane. At x = 0 the
//! surface becomes rough enough to enforce rolling without sliding, and the
//! constraint activation is impulsive: the momentum jumps to the focusing
//! projection onto the rolling fiber, trading translational for angular
//! momentum and dissipating kinetic energy. Run with
//!
//! ```bash
//! cargo run --example rolling_sphere
//! ```

use impulsive::dynamics::{integrate, IntegrationConfig, PhaseField, TerminalCause};
use impulsive::impact::{transition, ImpactState, TransitionConfig};
use impulsive::scenarios::{self, rolling_projector};

fn main() -> impulsive::Result<()> {
    let scenario = scenarios::by_name("rolling_sphere_rough")?;
    println!("{}: {}", scenario.name, scenario.description);
    for (name, value) in &scenario.params {
        println!("  {name} = {value}");
    }

    // Slide across the smooth half-plane until the roughness boundary.
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
        other => panic!("expected a boundary hit, got {other:?}"),
    };
    println!(
        "\nimpact at t = {:.6}, x = {:.3e}, sliding with p = {:?}",
        t_hit,
        impact_point.q[0],
        impact_point.p.as_slice()
    );

    // The transition focuses the momentum onto the rolling fiber.
    let impact = ImpactState::new(&scenario.system, impact_point, scenario.side)?;
    let result = transition(&scenario.system, &impact, &TransitionConfig::default())?;
    for branch in &result.branches {
        println!(
            "branch: side {}, {} dynamics, classified {}",
            branch.side.name(),
            branch.tag,
            branch.classification
        );
        println!("  decisive p = {:?}", branch.point.p.as_slice());
    }

    // The momentum jump is the closed-form rolling projector acting on p.
    let (r, k2) = (scenario.params[0].1, scenario.params[1].1);
    println!("\nrolling projector P(q):");
    let projector = rolling_projector(r, k2);
    for i in 0..projector.nrows() {
        let row: Vec<String> = projector
            .row(i)
            .iter()
            .map(|v| format!("{v:+.4}"))
            .collect();
        println!("  [ {} ]", row.join("  "));
    }
    for (name, value) in &scenario.reference_values {
        println!("  {name} = {value:.12}");
    }

    let decisive = &result.branches[0].point;
    let expected = projector * &impact.y.p;
    let err = (decisive.p.clone() - expected).amax();
    println!("\n|decisive p - P p| = {err:.3e}");
    assert!(err < 1e-12);

    let h_before = impact.energy;
    let h_after = data.system.hamiltonian(decisive)?;
    println!("energy: {h_before:.6} -> {h_after:.6} (dissipated by the impact)");
    Ok(())
}
