//! Describe a system inline with the configuration schema and run it.
//!
//! Builds a run configuration in code for a system that exists nowhere in
//! the library: a particle in a harmonic well, constrained to move along a
//! slanted line, bouncing elastically off a wall. The metric, potential,
//! constraint offsets and surface are all given in the small expression
//! grammar the config format supports. The config is written to disk as
//! JSON, validated, executed, and the outputs are summarized. Run with
//!
//! ```bash
//! cargo run --example custom_config
//! ```

use impulsive::driver::{
    self, MetricConfig, RunConfig, SideConfig, SystemConfig, ToleranceConfig,
};

fn main() -> impulsive::Result<()> {
    // A unit-mass particle in the plane, in a weak harmonic well centered at
    // the origin, constrained so the velocity along y matches a drift that
    // grows with x, with a wall at x = 2.
    let system = SystemConfig {
        coordinates: vec!["x".into(), "y".into()],
        metric: Some(MetricConfig::Diagonal {
            values: vec![1.0, 1.0],
        }),
        potential: Some("0.05 * (x^2 + y^2)".into()),
        surface: "x - 2".into(),
        minus: Some(SideConfig {
            constraint_rows: Some(vec![vec![0.0, 1.0]]),
            constraint_offsets: Some(vec!["-0.1 * x".into()]),
            ..SideConfig::default()
        }),
        plus: None,
        smooth_hamiltonian: None,
        linear_smooth_constraints: None,
        constraints_follow_transition: None,
    };

    let out_dir = std::env::temp_dir().join("impulsive_custom_config");
    let config = RunConfig {
        system: Some(system),
        q0: Some(vec![0.0, 0.0]),
        p0: Some(vec![1.0, 0.0]),
        side: Some("minus".into()),
        mode: Some("elastic".into()),
        t_end: Some(4.0),
        dt: Some(1e-3),
        tolerances: Some(ToleranceConfig {
            event: Some(1e-11),
            ..ToleranceConfig::default()
        }),
        max_branches: Some(4),
        output_dir: Some(out_dir.clone()),
        ..RunConfig::default()
    };

    // The same configuration as it would appear in a file.
    let path = out_dir.join("run.json");
    std::fs::create_dir_all(&out_dir)?;
    let text = serde_json::to_string_pretty(&config)
        .map_err(std::io::Error::other)?;
    std::fs::write(&path, &text)?;
    println!("config written to {}:\n{text}\n", path.display());
    let reloaded = RunConfig::from_file(&path)?;

    // Validation checks the constraint rank, the compatibility condition and
    // the transversality of the wall before anything runs.
    let report = driver::validate(&reloaded);
    print!("{}", report.render());
    assert!(report.passed());

    let summary = driver::run(&reloaded)?;
    println!(
        "\nwrote {} rows, {} events, {} branches",
        summary.rows, summary.events, summary.branches
    );

    // The wall reverses the x-momentum; the drift constraint stays active.
    let events = std::fs::read_to_string(&summary.events_path)?;
    for line in events.lines() {
        let record: serde_json::Value =
            serde_json::from_str(line).map_err(std::io::Error::other)?;
        println!(
            "event at t = {:.6}: p_x {:+.6} -> {:+.6}",
            record["time"].as_f64().unwrap(),
            record["impact_p"][0].as_f64().unwrap(),
            record["branches"][0]["point_p"][0].as_f64().unwrap()
        );
    }
    println!("trajectory: {}", summary.trajectory_path.display());
    Ok(())
}
