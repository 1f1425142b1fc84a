//! A rolling ball strikes a rigid wall with a no-slip contact point.
//!
//! The ball rolls on a rough floor toward the wall x = d. At the instant of
//! contact the wall adds one more no-slip row, so the impact happens in two
//! stages: the momentum first focuses onto the instantaneous constraint
//! fiber (dissipating energy through the contact), then the elastic
//! reflection reverses the normal component. The spin picked up at contact
//! survives the bounce. Run with
//!
//! ```bash
//! cargo run --example sphere_wall
//! ```

use impulsive::dynamics::{integrate, IntegrationConfig, PhaseField, TerminalCause};
use impulsive::impact::{transition, ImpactMode, ImpactState, TransitionConfig};
use impulsive::scenarios::{self, wall_reflection_coefficient};

fn main() -> impulsive::Result<()> {
    let scenario = scenarios::by_name("sphere_wall")?;
    println!("{}: {}", scenario.name, scenario.description);
    for (name, value) in &scenario.params {
        println!("  {name} = {value}");
    }

    // Roll toward the wall until contact.
    let data = scenario.system.side_data(scenario.side)?;
    let field = PhaseField::Constrained(&data.system, &data.constraints);
    let segment = integrate(
        &field,
        &scenario.initial,
        0.0,
        10.0,
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
        "\ncontact at t = {:.6} with p = {:?}",
        t_hit,
        impact_point.p.as_slice()
    );

    // Elastic bounce: contact projection, then reversal of the normal part.
    let impact = ImpactState::new(&scenario.system, impact_point.clone(), scenario.side)?;
    let px_in = impact.y.p[0];
    let result = transition(&scenario.system, &impact, &TransitionConfig::default())?;
    let branch = &result.branches[0];
    println!(
        "elastic branch: {} dynamics, classified {}, p = {:?}",
        branch.tag,
        branch.classification,
        branch.point.p.as_slice()
    );
    let h_before = impact.energy;
    let h_after = data.system.hamiltonian(&branch.point)?;
    println!("  energy {h_before:.6} -> {h_after:.6} (contact stage dissipates)");
    println!(
        "  normal momentum {px_in:+.6} -> {:+.6} (flipped)",
        branch.point.p[0]
    );

    // The full normal-momentum transfer matches the closed-form coefficient.
    let (r, k2) = (scenario.params[0].1, scenario.params[1].1);
    let c2 = wall_reflection_coefficient(r, k2, px_in);
    println!(
        "  reflective coefficient c = {c2:+.6} (impulse per unit contact time)"
    );

    // Inelastic variant: the ball sticks to the wall and the contact rows
    // trap the remaining motion on the surface.
    let inelastic = scenarios::by_name("sphere_wall")?
        .system
        .with_mode(ImpactMode::Inelastic);
    let impact = ImpactState::new(&inelastic, impact_point, scenario.side)?;
    let result = transition(&inelastic, &impact, &TransitionConfig::default())?;
    let branch = &result.branches[0];
    let v = data.system.anti_legendre(&branch.point)?;
    println!(
        "\ninelastic: single branch = {}, {} dynamics, classified {}",
        result.branches.len() == 1,
        branch.tag,
        branch.classification
    );
    println!(
        "  arrested normal velocity {:+.3e}, contact slip {:+.3e}",
        v[0],
        v[1] - r * v[4]
    );
    Ok(())
}
