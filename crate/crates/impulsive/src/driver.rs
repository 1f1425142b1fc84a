//! Configuration-driven simulation runs.
//!
//! A [`RunConfig`] names either a built-in scenario or an inline system
//! (constant metric, expression potential, constant constraint rows with
//! expression offsets, expression surface), plus the initial data and run
//! parameters. [`validate`] checks the configuration and the standing
//! hypotheses near the initial point without writing anything; [`run`]
//! integrates the branch set until the end time and writes a trajectory
//! table (`trajectory.csv`) and an event log (`events.jsonl`).
//!
//! Output is deterministic: identical configurations produce byte-identical
//! files. Floating-point values are written with 17 significant digits in
//! both formats, so every state can be reparsed exactly.

use std::collections::VecDeque;
use std::fs::{create_dir_all, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constraints::{
    constraint_residual, AffineConstraintSet, CriticalSurface, Side,
};
use crate::dynamics::{
    integrate, BoundaryClass, IntegrationConfig, PhaseField, TerminalCause,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ConfigChart, MechanicalSystem, PhasePoint};
use crate::impact::{
    characteristic_direction, falling_constraints, transition, DiscontinuousSystem,
    DynamicsTag, ImpactMode, ImpactState, SideData, TransitionConfig,
};
use crate::scenarios;

/// Default cap on simultaneously active branches.
pub const DEFAULT_MAX_BRANCHES: usize = 8;

/// Residual bound the initial state must satisfy on its constrained side.
pub const INITIAL_RESIDUAL_TOL: f64 = 1e-6;

/// Metric block of an inline system: identity, diagonal, or a full constant
/// symmetric positive-definite matrix.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    /// Identity matrix in the chart dimension.
    Identity,
    /// Diagonal matrix with the given positive entries.
    Diagonal {
        /// Diagonal entries, one per coordinate.
        values: Vec<f64>,
    },
    /// Full constant matrix given row by row.
    Constant {
        /// Matrix rows; must be square in the chart dimension.
        rows: Vec<Vec<f64>>,
    },
}

/// One side of an inline discontinuous system. Missing optional blocks fall
/// back to the top-level metric and potential; missing constraint rows mean
/// unconstrained motion on that side.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    /// Metric override for this side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    /// Potential-energy expression override for this side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    /// Constant constraint rows J (velocity form J q̇ + μ₀ = 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_rows: Option<Vec<Vec<f64>>>,
    /// Affine offsets μ₀ as expressions in the chart coordinates, one per
    /// constraint row. Missing means zero offsets (linear constraints).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_offsets: Option<Vec<String>>,
    /// Extra constant rows imposed only at the instant of contact with the
    /// boundary; they are stacked onto the constraint rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inst_rows: Option<Vec<Vec<f64>>>,
}

/// Inline system description: chart, kinetic and potential terms, the
/// switching surface, and one or two sides.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Coordinate names; these are the variables the expressions may use.
    pub coordinates: Vec<String>,
    /// Kinetic-energy metric shared by both sides unless overridden.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    /// Potential-energy expression shared by both sides unless overridden.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    /// Switching-surface expression f; the plus side is f > 0.
    pub surface: String,
    /// Minus-side description (absent for a one-sided wall on the plus side).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus: Option<SideConfig>,
    /// Plus-side description (absent for a one-sided wall on the minus side).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plus: Option<SideConfig>,
    /// Force the smooth-Hamiltonian transition engines regardless of the
    /// side data comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth_hamiltonian: Option<bool>,
    /// Declare both constraint distributions smooth across the surface, which
    /// collapses the elastic candidate search to a single reflection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_smooth_constraints: Option<bool>,
    /// Carry the target side's constraints back when a transition is blown
    /// back into its starting region.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints_follow_transition: Option<bool>,
}

/// Numerical knobs, all optional; unset fields keep library defaults.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Bisection bound on |f| at a boundary hit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<f64>,
    /// Threshold on the directional derivatives deciding in/out order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_order: Option<f64>,
    /// Largest tangency order examined before declaring trapping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tangency_order: Option<usize>,
    /// Hard cap on accepted steps per trajectory leg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Iteration cap for the decisive-point search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_transition_iterations: Option<usize>,
    /// Distance below which two phase points count as the same (cycles).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<f64>,
    /// Kinetic-energy floor below which a candidate is discarded as rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_floor: Option<f64>,
}

/// Complete description of one simulation run. Exactly one of `scenario` and
/// `system` must be present.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Inline system description.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    /// Initial configuration; required for inline systems, defaulted by
    /// scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    /// Initial momentum; required for inline systems, defaulted by scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    /// Side of the surface the motion starts on ("minus" or "plus").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    /// Impact mode ("elastic" or "inelastic"); overrides the scenario's mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// End time of the run; required by [`run`], ignored by [`validate`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Fixed integration step size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Numerical tolerances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceConfig>,
    /// Cap on simultaneously active branches (default 8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_branches: Option<usize>,
    /// Directory receiving `trajectory.csv` and `events.jsonl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Read a configuration from a JSON file.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidConfig(format!("config file {}: {e}", path.display()))
        })
    }

    /// Integration configuration assembled from `dt` and the tolerances.
    fn integration(&self) -> IntegrationConfig {
        let mut cfg = IntegrationConfig::default();
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(tol) = &self.tolerances {
            if let Some(v) = tol.event {
                cfg.event_tolerance = v;
            }
            if let Some(v) = tol.boundary_order {
                cfg.boundary_order_tolerance = v;
            }
            if let Some(v) = tol.max_tangency_order {
                cfg.max_tangency_order = v;
            }
            if let Some(v) = tol.max_steps {
                cfg.max_steps = v;
            }
        }
        cfg
    }

    /// Transition configuration assembled from the tolerances.
    fn transitions(&self) -> TransitionConfig {
        let mut cfg = TransitionConfig {
            classify: self.integration(),
            ..TransitionConfig::default()
        };
        if let Some(tol) = &self.tolerances {
            if let Some(v) = tol.max_transition_iterations {
                cfg.max_iterations = v;
            }
            if let Some(v) = tol.cycle {
                cfg.cycle_tolerance = v;
            }
            if let Some(v) = tol.energy_floor {
                cfg.energy_floor = v;
            }
        }
        cfg
    }
}

/// Parse a side name from configuration text.
pub fn parse_side(name: &str) -> Result<Side> {
    match name {
        "minus" => Ok(Side::Minus),
        "plus" => Ok(Side::Plus),
        other => Err(Error::InvalidConfig(format!(
            "side must be \"minus\" or \"plus\", got {other:?}"
        ))),
    }
}

/// Parse an impact mode name from configuration text.
pub fn parse_mode(name: &str) -> Result<ImpactMode> {
    match name {
        "elastic" => Ok(ImpactMode::Elastic),
        "inelastic" => Ok(ImpactMode::Inelastic),
        other => Err(Error::InvalidConfig(format!(
            "mode must be \"elastic\" or \"inelastic\", got {other:?}"
        ))),
    }
}

/// A configuration resolved into a ready-to-run system with initial data.
#[derive(Clone, Debug)]
pub struct BuiltRun {
    /// Short label identifying the system in reports.
    pub label: String,
    /// The discontinuous system to simulate.
    pub system: DiscontinuousSystem,
    /// Initial phase point.
    pub initial: PhasePoint,
    /// Side of the surface the motion starts on.
    pub side: Side,
}

fn metric_matrix(config: &MetricConfig, n: usize) -> Result<DMatrix<f64>> {
    let g = match config {
        MetricConfig::Identity => DMatrix::identity(n, n),
        MetricConfig::Diagonal { values } => {
            if values.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "diagonal metric has {} entries for a {n}-dimensional chart",
                    values.len()
                )));
            }
            DMatrix::from_diagonal(&DVector::from_vec(values.clone()))
        }
        MetricConfig::Constant { rows } => constant_matrix(rows, n, n, "metric")?,
    };
    if !g.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidConfig("metric entries must be finite".into()));
    }
    Ok(g)
}

fn constant_matrix(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::InvalidConfig(format!(
            "{what} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidConfig(format!(
                "{what} row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{what} row {i} contains non-finite entries"
            )));
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn build_side(
    side: &SideConfig,
    chart: &ConfigChart,
    shared_metric: &Option<MetricConfig>,
    shared_potential: &Option<String>,
) -> Result<SideData> {
    let n = chart.dim();
    let metric = side.metric.as_ref().or(shared_metric.as_ref());
    let g = match metric {
        Some(m) => metric_matrix(m, n)?,
        None => DMatrix::identity(n, n),
    };
    let mut system = MechanicalSystem::constant_metric(chart.clone(), g);
    let potential = side.potential.as_ref().or(shared_potential.as_ref());
    if let Some(source) = potential {
        let expr = Expr::parse(source, chart)?;
        system = system.with_potential(move |q: &DVector<f64>| expr.eval(q));
    }

    let constraints = match &side.constraint_rows {
        None => {
            if side.constraint_offsets.is_some() {
                return Err(Error::InvalidConfig(
                    "constraint_offsets given without constraint_rows".into(),
                ));
            }
            AffineConstraintSet::linear(DMatrix::zeros(0, n))
        }
        Some(rows) => {
            let m = rows.len();
            let j = constant_matrix(rows, m, n, "constraint_rows")?;
            match &side.constraint_offsets {
                None => AffineConstraintSet::linear(j),
                Some(offsets) => {
                    if offsets.len() != m {
                        return Err(Error::InvalidConfig(format!(
                            "{} constraint_offsets for {m} constraint_rows",
                            offsets.len()
                        )));
                    }
                    let exprs: Vec<Expr> = offsets
                        .iter()
                        .map(|s| Expr::parse(s, chart))
                        .collect::<Result<_>>()?;
                    AffineConstraintSet::new(
                        m,
                        move |_: &DVector<f64>| j.clone(),
                        move |q: &DVector<f64>| {
                            DVector::from_iterator(
                                exprs.len(),
                                exprs.iter().map(|e| e.eval(q)),
                            )
                        },
                    )
                }
            }
        }
    };

    let data = SideData::new(system, constraints);
    match &side.inst_rows {
        None => Ok(data),
        Some(rows) => {
            let extra = constant_matrix(rows, rows.len(), n, "inst_rows")?;
            let inst = AffineConstraintSet::stacked(
                &data.constraints,
                &AffineConstraintSet::linear(extra),
            );
            Ok(data.with_inst_constraints(inst))
        }
    }
}

fn build_inline(config: &SystemConfig) -> Result<DiscontinuousSystem> {
    let chart = ConfigChart::new(config.coordinates.clone())?;
    let surface_expr = Expr::parse(&config.surface, &chart)?;
    let surface = CriticalSurface::new(move |q: &DVector<f64>| surface_expr.eval(q));

    let minus = config
        .minus
        .as_ref()
        .map(|s| build_side(s, &chart, &config.metric, &config.potential))
        .transpose()?;
    let plus = config
        .plus
        .as_ref()
        .map(|s| build_side(s, &chart, &config.metric, &config.potential))
        .transpose()?;

    let mut system = DiscontinuousSystem::new(surface, minus, plus, ImpactMode::Elastic)?;
    if let Some(v) = config.smooth_hamiltonian {
        system = system.with_smooth_hamiltonian(v);
    }
    if let Some(v) = config.linear_smooth_constraints {
        system = system.with_linear_smooth_constraints(v);
    }
    if let Some(v) = config.constraints_follow_transition {
        system = system.with_constraints_follow_transition(v);
    }
    Ok(system)
}

/// Resolve a configuration into a system plus initial data.
pub fn build(config: &RunConfig) -> Result<BuiltRun> {
    let (label, mut system, mut initial, mut side) =
        match (&config.scenario, &config.system) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "give either a scenario name or an inline system, not both"
                        .into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "a scenario name or an inline system is required".into(),
                ))
            }
            (Some(name), None) => {
                let scenario = scenarios::by_name(name)?;
                (
                    scenario.name.to_string(),
                    scenario.system,
                    scenario.initial,
                    scenario.side,
                )
            }
            (None, Some(inline)) => {
                let system = build_inline(inline)?;
                let n = system.side_data(initial_side(config, inline)?)?.system.dim();
                let q0 = config.q0.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("inline systems require q0".into())
                })?;
                let p0 = config.p0.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("inline systems require p0".into())
                })?;
                let point = phase_from_parts(q0, p0, n)?;
                ("inline".to_string(), system, point, initial_side(config, inline)?)
            }
        };

    // Scenario defaults may still be overridden from the configuration.
    if config.scenario.is_some() {
        let n = system.side_data(side)?.system.dim();
        if config.q0.is_some() || config.p0.is_some() {
            let q0 = match &config.q0 {
                Some(v) => v.clone(),
                None => initial.q.iter().copied().collect(),
            };
            let p0 = match &config.p0 {
                Some(v) => v.clone(),
                None => initial.p.iter().copied().collect(),
            };
            initial = phase_from_parts(&q0, &p0, n)?;
        }
        if let Some(name) = &config.side {
            side = parse_side(name)?;
        }
    }
    if let Some(name) = &config.mode {
        system = system.with_mode(parse_mode(name)?);
    }

    Ok(BuiltRun {
        label,
        system,
        initial,
        side,
    })
}

fn initial_side(config: &RunConfig, inline: &SystemConfig) -> Result<Side> {
    match &config.side {
        Some(name) => parse_side(name),
        None => match (&inline.minus, &inline.plus) {
            (Some(_), None) => Ok(Side::Minus),
            (None, Some(_)) => Ok(Side::Plus),
            _ => Err(Error::InvalidConfig(
                "two-sided inline systems require an explicit side".into(),
            )),
        },
    }
}

fn phase_from_parts(q0: &[f64], p0: &[f64], n: usize) -> Result<PhasePoint> {
    if q0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "q0 has {} entries for a {n}-dimensional chart",
            q0.len()
        )));
    }
    if p0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "p0 has {} entries for a {n}-dimensional chart",
            p0.len()
        )));
    }
    PhasePoint::new(
        DVector::from_vec(q0.to_vec()),
        DVector::from_vec(p0.to_vec()),
    )
}

/// Outcome of one validation check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    /// Short check name.
    pub name: String,
    /// Whether the check passed.
    pub passed: bool,
    /// Human-readable detail (value, bound, or failure reason).
    pub detail: String,
}

/// Collected validation results; never written to disk.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    /// Individual check outcomes in a fixed order.
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    /// True when every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    /// One line per check, `ok`-prefixed or `FAIL`-prefixed.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let status = if check.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("{status}  {}: {}\n", check.name, check.detail));
        }
        out
    }
}

/// Project `q0` onto the surface with damped Newton steps along the gradient.
/// Returns None when no nearby surface point is found, which is reported as
/// an inconclusive (passing) transversality sample.
fn project_to_surface(
    surface: &CriticalSurface,
    q0: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = q0.len();
    let mut seeds = vec![q0.clone()];
    for i in 0..n {
        for delta in [0.05, -0.05, 0.5, -0.5] {
            let mut q = q0.clone();
            q[i] += delta;
            seeds.push(q);
        }
    }
    for mut q in seeds {
        for _ in 0..64 {
            let f = surface.value(&q);
            if !f.is_finite() {
                break;
            }
            if f.abs() < 1e-10 {
                return Some(q);
            }
            let grad = surface.gradient_at(&q);
            let norm2 = grad.norm_squared();
            if !(norm2.is_finite() && norm2 > 1e-16) {
                break;
            }
            q -= grad * (f / norm2);
        }
    }
    None
}

/// Check a configuration and the standing hypotheses near its initial point.
///
/// The checks cover: configuration shape and numbers, initial-state
/// dimensions and constraint residual, constraint rank and compatibility on
/// each present side, and transversality of the constrained characteristic
/// sampled on the surface near the initial point. Nothing is written; the
/// report lists each check with a pass flag and detail text.
pub fn validate(config: &RunConfig) -> ValidationReport {
    let mut report = ValidationReport::default();

    let built = match build(config) {
        Ok(b) => {
            report.push("config", true, format!("system \"{}\" built", b.label));
            b
        }
        Err(e) => {
            report.push("config", false, e.to_string());
            return report;
        }
    };

    if let Some(t_end) = config.t_end {
        let good = t_end.is_finite() && t_end >= 0.0;
        report.push(
            "t_end",
            good,
            if good {
                format!("{t_end}")
            } else {
                format!("must be finite and nonnegative, got {t_end}")
            },
        );
    }
    if let Some(dt) = config.dt {
        let good = dt.is_finite() && dt > 0.0;
        report.push(
            "dt",
            good,
            if good {
                format!("{dt}")
            } else {
                format!("must be finite and positive, got {dt}")
            },
        );
    }
    if let Some(max_branches) = config.max_branches {
        let good = max_branches >= 1;
        report.push(
            "max_branches",
            good,
            if good {
                format!("{max_branches}")
            } else {
                "must be at least 1".to_string()
            },
        );
    }

    let y0 = &built.initial;

    // Initial state: side present, dimensions already enforced by build,
    // momentum-form residual within tolerance on the starting side.
    match built.system.side_data(built.side) {
        Err(e) => report.push("initial_side", false, e.to_string()),
        Ok(data) => {
            report.push(
                "initial_side",
                true,
                format!("starts on the {} side", built.side.name()),
            );
            match constraint_residual(&data.system, &data.constraints, y0) {
                Err(e) => report.push("initial_residual", false, e.to_string()),
                Ok(residual) => {
                    let worst = residual.amax_or_zero();
                    report.push(
                        "initial_residual",
                        worst <= INITIAL_RESIDUAL_TOL,
                        format!("max |J G p + mu| = {worst:.3e} (bound {INITIAL_RESIDUAL_TOL:.0e})"),
                    );
                }
            }
        }
    }

    // Per-side structural checks at the initial configuration: constraint
    // rank and compatibility (B symmetric positive-definite).
    for side in [Side::Minus, Side::Plus] {
        let data = match built.system.side_opt(side) {
            Some(d) => d,
            None => continue,
        };
        let name = format!("compatibility[{}]", side.name());
        match crate::constraints::compatibility(&data.system, &data.constraints, &y0.q)
        {
            Ok(_) => {
                report.push(
                    &name,
                    true,
                    format!("{} rows, B factorized", data.constraints.count()),
                );
            }
            Err(e) => report.push(&name, false, e.to_string()),
        }
        if let Some(inst) = &data.inst_constraints {
            let name = format!("compatibility[{}][inst]", side.name());
            match crate::constraints::compatibility(&data.system, inst, &y0.q) {
                Ok(_) => {
                    report.push(&name, true, format!("{} rows, B factorized", inst.count()));
                }
                Err(e) => report.push(&name, false, e.to_string()),
            }
        }
    }

    // Transversality of the constrained characteristic, sampled on the
    // surface near the initial configuration.
    match project_to_surface(built.system.surface(), &y0.q) {
        None => report.push(
            "transversality",
            true,
            "no surface point found near q0; sample skipped".to_string(),
        ),
        Some(q_surface) => {
            let probe = PhasePoint::new(q_surface.clone(), DVector::zeros(q_surface.len()))
                .expect("projected configuration is finite");
            for side in [Side::Minus, Side::Plus] {
                if built.system.side_opt(side).is_none() {
                    continue;
                }
                let name = format!("transversality[{}]", side.name());
                match characteristic_direction(&built.system, side, &probe) {
                    Ok(_) => report.push(
                        &name,
                        true,
                        "P(df) nonzero at the sampled surface point".to_string(),
                    ),
                    Err(e) => report.push(&name, false, e.to_string()),
                }
            }
        }
    }

    report
}

trait AmaxOrZero {
    fn amax_or_zero(&self) -> f64;
}

impl AmaxOrZero for DVector<f64> {
    fn amax_or_zero(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.amax()
        }
    }
}

/// Summary of one completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    /// Number of boundary events processed.
    pub events: usize,
    /// Total branches created, including the initial one.
    pub branches: usize,
    /// Branches discarded because the active-branch cap was reached.
    pub pruned: usize,
    /// Rows written to the trajectory table (excluding the header).
    pub rows: usize,
    /// Path of the trajectory table.
    pub trajectory_path: PathBuf,
    /// Path of the event log.
    pub events_path: PathBuf,
}

/// One active trajectory branch in the run loop.
struct ActiveBranch {
    id: usize,
    t: f64,
    state: PhasePoint,
    /// Side whose Hamiltonian and constraints govern the motion.
    side: Side,
    /// Geometric region the motion occupies (sign convention for f).
    region: Side,
    /// Constraint set governing this leg.
    constraints: AffineConstraintSet,
    /// Whether boundary events are armed for this leg.
    watching: bool,
}

#[derive(Serialize)]
struct BranchRecord {
    id: Option<usize>,
    side: String,
    region: String,
    tag: String,
    classification: String,
    order: Option<usize>,
    point_q: Vec<f64>,
    point_p: Vec<f64>,
    energy_after: f64,
}

#[derive(Serialize)]
struct EventRecord {
    time: f64,
    branch: usize,
    side_before: String,
    region_before: String,
    impact_q: Vec<f64>,
    impact_p: Vec<f64>,
    energy_before: f64,
    sequence_steps: usize,
    trapped: bool,
    pruned: usize,
    branches: Vec<BranchRecord>,
}

/// JSON formatter writing all floating-point numbers with 17 significant
/// digits so that values can be reparsed exactly.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn write_json_line<W: Write, T: Serialize>(writer: &mut W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *writer, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(writer)?;
    Ok(())
}

fn sci(value: f64) -> String {
    format!("{value:.16e}")
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn classification_parts(class: &BoundaryClass) -> (&'static str, Option<usize>) {
    match class {
        BoundaryClass::In { order } => ("in", Some(*order)),
        BoundaryClass::Out { order } => ("out", Some(*order)),
        BoundaryClass::Trapping => ("trapping", None),
    }
}

/// Continuation data for a decisive branch: governing constraint set and
/// whether boundary events stay armed.
///
/// A constrained branch classified as entering keeps the side's constraint
/// set with events armed. A trapped constrained branch and every trace
/// branch move on the surface itself, so they integrate the corresponding
/// falling set with event detection off (the surface is not an event for
/// motion that lives on it).
fn continuation(
    system: &DiscontinuousSystem,
    branch: &crate::impact::TransitionBranch,
) -> Result<(AffineConstraintSet, bool)> {
    match branch.tag {
        DynamicsTag::Constrained => {
            let data = system.side_data(branch.side)?;
            match branch.classification {
                BoundaryClass::Trapping => {
                    let set = falling_constraints(
                        &data.system,
                        &data.constraints,
                        system.surface(),
                        &branch.point.q,
                    )?;
                    Ok((set, false))
                }
                _ => Ok((data.constraints.clone(), true)),
            }
        }
        DynamicsTag::Trace | DynamicsTag::InstTrace => {
            let set = system.branch_constraints(branch)?;
            Ok((set, false))
        }
    }
}

/// Run a configuration to completion, writing `trajectory.csv` and
/// `events.jsonl` into the output directory.
///
/// The trajectory table holds one row per accepted step with columns
/// `t,branch,side,q_1..q_n,p_1..p_n,H,residual_max,f`. The event log holds
/// one JSON object per boundary event with the impact state, the decisive
/// branch set, energies on both sides of the transition, and the length of
/// the admissible sequence that produced it. With `t_end = 0` the files
/// contain only headers (the trajectory header line; an empty event log).
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let built = build(config)?;
    let t_end = config.t_end.ok_or_else(|| {
        Error::InvalidConfig("t_end is required for a run".into())
    })?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "t_end must be finite and nonnegative, got {t_end}"
        )));
    }
    let max_branches = config.max_branches.unwrap_or(DEFAULT_MAX_BRANCHES);
    if max_branches < 1 {
        return Err(Error::InvalidConfig(
            "max_branches must be at least 1".into(),
        ));
    }
    let int_config = config.integration();
    int_config.validate()?;
    let trans_config = config.transitions();

    let system = &built.system;
    let start_data = system.side_data(built.side)?;
    let n = start_data.system.dim();
    let residual =
        constraint_residual(&start_data.system, &start_data.constraints, &built.initial)?;
    let worst = residual.amax_or_zero();
    if worst > INITIAL_RESIDUAL_TOL {
        return Err(Error::InvalidConfig(format!(
            "initial state violates the {} side constraints: residual {worst:.3e} > {INITIAL_RESIDUAL_TOL:.0e}",
            built.side.name()
        )));
    }

    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    create_dir_all(&out_dir)?;
    let trajectory_path = out_dir.join("trajectory.csv");
    let events_path = out_dir.join("events.jsonl");
    let mut trajectory = BufWriter::new(File::create(&trajectory_path)?);
    let mut events = BufWriter::new(File::create(&events_path)?);

    let mut header = String::from("t,branch,side");
    for i in 1..=n {
        header.push_str(&format!(",q_{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p_{i}"));
    }
    header.push_str(",H,residual_max,f");
    writeln!(trajectory, "{header}")?;

    let mut summary = RunSummary {
        events: 0,
        branches: 1,
        pruned: 0,
        rows: 0,
        trajectory_path,
        events_path,
    };

    // An empty run is valid and produces a zero-row trajectory.
    if t_end == 0.0 {
        trajectory.flush()?;
        events.flush()?;
        return Ok(summary);
    }

    let mut queue: VecDeque<ActiveBranch> = VecDeque::new();
    queue.push_back(ActiveBranch {
        id: 0,
        t: 0.0,
        state: built.initial.clone(),
        side: built.side,
        region: built.side,
        constraints: start_data.constraints.clone(),
        watching: true,
    });
    let mut next_id = 1;

    while let Some(active) = queue.pop_front() {
        let data = system.side_data(active.side)?;
        let field = PhaseField::Constrained(&data.system, &active.constraints);
        let surface = active.watching.then(|| system.surface());
        let segment = integrate(
            &field,
            &active.state,
            active.t,
            t_end,
            surface,
            active.region,
            &int_config,
        )?;

        for (t, state) in segment.times.iter().zip(&segment.states) {
            let h = data.system.hamiltonian(state)?;
            let res = constraint_residual(&data.system, &active.constraints, state)?
                .amax_or_zero();
            let f = system.surface().value(&state.q);
            let mut row = String::with_capacity(32 * (2 * n + 5));
            row.push_str(&sci(*t));
            row.push(',');
            row.push_str(&active.id.to_string());
            row.push(',');
            row.push_str(active.side.name());
            for v in state.q.iter().chain(state.p.iter()) {
                row.push(',');
                row.push_str(&sci(*v));
            }
            row.push(',');
            row.push_str(&sci(h));
            row.push(',');
            row.push_str(&sci(res));
            row.push(',');
            row.push_str(&sci(f));
            writeln!(trajectory, "{row}")?;
            summary.rows += 1;
        }

        let t_hit = segment.last_time();
        let point = match segment.terminal {
            TerminalCause::ReachedEnd => continue,
            TerminalCause::StepLimit => {
                return Err(Error::StepLimitExceeded {
                    max_steps: int_config.max_steps,
                })
            }
            TerminalCause::BoundaryHit { point, .. } => point,
        };

        let impact =
            ImpactState::with_region(system, point, active.side, active.region)?;
        let result = transition(system, &impact, &trans_config)?;
        summary.events += 1;

        // The parent branch ends here; admit children up to the cap on
        // simultaneously active branches, pruning the rest in listed order.
        let capacity = max_branches.saturating_sub(queue.len());
        let mut records = Vec::with_capacity(result.branches.len());
        for (k, decisive) in result.branches.iter().enumerate() {
            let (class, order) = classification_parts(&decisive.classification);
            let energy_after = system
                .side_data(decisive.side)?
                .system
                .hamiltonian(&decisive.point)?;
            let admitted = k < capacity;
            let id = if admitted {
                let (constraints, watching) = continuation(system, decisive)?;
                let id = next_id;
                next_id += 1;
                summary.branches += 1;
                queue.push_back(ActiveBranch {
                    id,
                    t: t_hit,
                    state: decisive.point.clone(),
                    side: decisive.side,
                    region: decisive.region,
                    constraints,
                    watching,
                });
                Some(id)
            } else {
                summary.pruned += 1;
                None
            };
            records.push(BranchRecord {
                id,
                side: decisive.side.name().to_string(),
                region: decisive.region.name().to_string(),
                tag: decisive.tag.to_string(),
                classification: class.to_string(),
                order,
                point_q: vec_of(&decisive.point.q),
                point_p: vec_of(&decisive.point.p),
                energy_after,
            });
        }
        let pruned_here = records.iter().filter(|r| r.id.is_none()).count();
        let record = EventRecord {
            time: t_hit,
            branch: active.id,
            side_before: active.side.name().to_string(),
            region_before: active.region.name().to_string(),
            impact_q: vec_of(&impact.y.q),
            impact_p: vec_of(&impact.y.p),
            energy_before: impact.energy,
            sequence_steps: result.steps,
            trapped: result.is_trapped(),
            pruned: pruned_here,
            branches: records,
        };
        write_json_line(&mut events, &record)?;
    }

    trajectory.flush()?;
    events.flush()?;
    Ok(summary)
}
