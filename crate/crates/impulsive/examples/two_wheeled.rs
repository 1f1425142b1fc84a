//! A two-wheeled carriage hits the mechanical bound on its link length.
//!
//! Two wheels of different radii roll on parallel rails, joined by a link
//! whose length must stay inside a band [a, b]. The admissible region is the
//! inside of f = (b - l)(l - a) > 0, where l is the distance between the
//! contact points. When the wheels drift apart to l = b the link snaps taut:
//! elastically the relative velocity reflects, inelastically the link locks
//! and the wheels move in unison from then on. Run with
//!
//! ```bash
//! cargo run --example two_wheeled
//! ```

use impulsive::impact::{transition, ImpactMode, ImpactState, TransitionConfig};
use impulsive::scenarios::{self, wheel_projector};

fn main() -> impulsive::Result<()> {
    let scenario = scenarios::by_name("two_wheeled")?;
    println!("{}: {}", scenario.name, scenario.description);
    for (name, value) in &scenario.params {
        println!("  {name} = {value}");
    }
    let (r1, r2) = (scenario.params[0].1, scenario.params[1].1);
    let (a, b) = (scenario.params[2].1, scenario.params[3].1);

    println!("\nrolling projector (joint wheel system):");
    let projector = wheel_projector(r1, r2);
    for i in 0..projector.nrows() {
        let row: Vec<String> = projector
            .row(i)
            .iter()
            .map(|v| format!("{v:+.4}"))
            .collect();
        println!("  [ {} ]", row.join("  "));
    }

    // Start the wheels at the outer edge of the band, separating: wheel 2
    // drives away while wheel 1 rests. This is the moment the link goes taut.
    let gap = r2 - r1;
    let sep = (b * b - gap * gap).sqrt();
    let q = nalgebra::DVector::from_vec(vec![0.0, sep, 0.0, 0.0]);
    let v = nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0 / r2]);
    let data = scenario.system.side_data(scenario.side)?;
    let p = data.system.legendre(&q, &v)?;
    let taut = impulsive::PhasePoint::new(q, p)?;
    println!("\nlink band [{a}, {b}]; taut at separation {sep:.6} (l = b)");

    // Elastic: the link recoils, reversing the separation rate.
    let impact = ImpactState::new(&scenario.system, taut.clone(), scenario.side)?;
    let result = transition(&scenario.system, &impact, &TransitionConfig::default())?;
    let branch = &result.branches[0];
    let v_out = data.system.anti_legendre(&branch.point)?;
    println!(
        "\nelastic: {} dynamics, classified {}",
        branch.tag, branch.classification
    );
    println!(
        "  wheel velocities {:+.6}, {:+.6} (now approaching)",
        v_out[0], v_out[1]
    );
    let h_in = impact.energy;
    let h_out = data.system.hamiltonian(&branch.point)?;
    println!("  energy {h_in:.6} -> {h_out:.6} (elastic, conserved)");

    // Inelastic: the link locks and both wheels roll together on the bound.
    let locked = scenarios::by_name("two_wheeled")?
        .system
        .with_mode(ImpactMode::Inelastic);
    let impact = ImpactState::new(&locked, taut, scenario.side)?;
    let result = transition(&locked, &impact, &TransitionConfig::default())?;
    let branch = &result.branches[0];
    let v_out = data.system.anti_legendre(&branch.point)?;
    println!(
        "\ninelastic: {} dynamics, classified {} (single branch: {})",
        branch.tag,
        branch.classification,
        result.branches.len() == 1
    );
    println!(
        "  wheel velocities {:+.6}, {:+.6} (locked together)",
        v_out[0], v_out[1]
    );
    let h_out = data.system.hamiltonian(&branch.point)?;
    println!("  energy {h_in:.6} -> {h_out:.6} (dissipated by the lock)");
    Ok(())
}
