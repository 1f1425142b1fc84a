//! The transition engine: characteristic directions, reflective and
//! refractive steps, and the decisive-point search for the four impact
//! regimes (elastic/inelastic crossed with smooth/discontinuous Hamiltonian).
//!
//! An impact happens when a trajectory on side ε reaches the critical
//! hypersurface N = f⁻¹(0) at a point y. The constrained characteristic
//! through y is the affine line y + c·P_ε(d_qf); reflective steps pick c so
//! the same side's energy is preserved, refractive steps match the opposite
//! side's energy level. Candidate end points are focused onto the target
//! side's (instantaneous) constraint fiber and classified as in, out, or
//! trapping; in and trapping points are decisive, out points continue the
//! admissible sequence. An empty result means the trajectory is trapped on N.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::constraints::{
    compatibility, focusing_point, trace_constraints, AffineConstraintSet, CriticalSurface, Side,
};
use crate::dynamics::{classify_boundary, BoundaryClass, IntegrationConfig, PhaseField};
use crate::error::{Error, Result};
use crate::geometry::{MechanicalSystem, PhasePoint};

/// 𝒢-norm below which P(d_qf) counts as degenerate (transversality failure).
pub const TRANSVERSALITY_TOL: f64 = 1e-10;

/// |f| bound accepted when constructing an impact state.
const IMPACT_SURFACE_TOL: f64 = 1e-8;

/// Constraint-residual bound accepted when constructing an impact state.
const IMPACT_RESIDUAL_TOL: f64 = 1e-6;

/// Impact resolution mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImpactMode {
    /// Kinetic energy is preserved across the transition steps.
    Elastic,
    /// The trajectory falls onto the surface and keeps moving along it.
    Inelastic,
}

impl std::fmt::Display for ImpactMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ImpactMode::Elastic => "elastic",
            ImpactMode::Inelastic => "inelastic",
        })
    }
}

/// Everything one side of the discontinuity carries: its mechanical system,
/// its affine constraints (possibly empty), and optional instantaneous
/// constraints imposed along N.
#[derive(Clone, Debug)]
pub struct SideData {
    pub system: MechanicalSystem,
    pub constraints: AffineConstraintSet,
    pub inst_constraints: Option<AffineConstraintSet>,
}

impl SideData {
    pub fn new(system: MechanicalSystem, constraints: AffineConstraintSet) -> Self {
        SideData {
            system,
            constraints,
            inst_constraints: None,
        }
    }

    pub fn with_inst_constraints(mut self, inst: AffineConstraintSet) -> Self {
        self.inst_constraints = Some(inst);
        self
    }
}

/// A mechanical system discontinuous along a critical hypersurface. An absent
/// side is a wall (infinite Hamiltonian there).
#[derive(Clone, Debug)]
pub struct DiscontinuousSystem {
    surface: CriticalSurface,
    minus: Option<SideData>,
    plus: Option<SideData>,
    mode: ImpactMode,
    smooth_hamiltonian: Option<bool>,
    linear_smooth_constraints: bool,
    constraints_follow_transition: bool,
}

impl DiscontinuousSystem {
    pub fn new(
        surface: CriticalSurface,
        minus: Option<SideData>,
        plus: Option<SideData>,
        mode: ImpactMode,
    ) -> Result<Self> {
        if minus.is_none() && plus.is_none() {
            return Err(Error::InvalidConfig(
                "a discontinuous system needs at least one side".into(),
            ));
        }
        Ok(DiscontinuousSystem {
            surface,
            minus,
            plus,
            mode,
            smooth_hamiltonian: None,
            linear_smooth_constraints: false,
            constraints_follow_transition: false,
        })
    }

    pub fn with_mode(mut self, mode: ImpactMode) -> Self {
        self.mode = mode;
        self
    }

    /// Override the smoothness detection (same g and V on both sides).
    pub fn with_smooth_hamiltonian(mut self, smooth: bool) -> Self {
        self.smooth_hamiltonian = Some(smooth);
        self
    }

    /// Declare that the constraint sets are linear, identical across N, and
    /// that no instantaneous sets are involved; enables the direct
    /// characteristic shortcut in the elastic discontinuous-H engine.
    pub fn with_linear_smooth_constraints(mut self, flag: bool) -> Self {
        self.linear_smooth_constraints = flag;
        self
    }

    /// After a transition, the new side's constraint set governs the motion
    /// no matter which geometric region the branch continues in.
    pub fn with_constraints_follow_transition(mut self, flag: bool) -> Self {
        self.constraints_follow_transition = flag;
        self
    }

    pub fn surface(&self) -> &CriticalSurface {
        &self.surface
    }

    pub fn mode(&self) -> ImpactMode {
        self.mode
    }

    pub fn constraints_follow_transition(&self) -> bool {
        self.constraints_follow_transition
    }

    pub fn side_opt(&self, side: Side) -> Option<&SideData> {
        match side {
            Side::Minus => self.minus.as_ref(),
            Side::Plus => self.plus.as_ref(),
        }
    }

    pub fn side_data(&self, side: Side) -> Result<&SideData> {
        self.side_opt(side)
            .ok_or(Error::SideAbsent { side: side.name() })
    }

    /// Whether the Hamiltonian is smooth across N: explicit override, or both
    /// sides sharing the same metric and potential closures.
    pub fn is_smooth(&self) -> bool {
        if let Some(flag) = self.smooth_hamiltonian {
            return flag;
        }
        match (&self.minus, &self.plus) {
            (Some(a), Some(b)) => a.system.shares_hamiltonian(&b.system),
            _ => false,
        }
    }

    /// The constraint set a transition branch continues under.
    pub fn branch_constraints(&self, branch: &TransitionBranch) -> Result<AffineConstraintSet> {
        let data = self.side_data(branch.side)?;
        match branch.tag {
            DynamicsTag::Constrained => Ok(data.constraints.clone()),
            DynamicsTag::Trace => falling_constraints(
                &data.system,
                &data.constraints,
                &self.surface,
                &branch.point.q,
            ),
            DynamicsTag::InstTrace => {
                let inst = data
                    .inst_constraints
                    .as_ref()
                    .ok_or(Error::SideAbsent { side: branch.side.name() })?;
                falling_constraints(&data.system, inst, &self.surface, &branch.point.q)
            }
        }
    }
}

/// State of a trajectory at the moment it reaches N.
#[derive(Clone, Debug)]
pub struct ImpactState {
    /// The impact point (on N within tolerance).
    pub y: PhasePoint,
    /// Side whose data governed the incoming motion.
    pub side: Side,
    /// Geometric region the motion arrived from (differs from `side` only
    /// under constraints_follow_transition).
    pub region: Side,
    /// Cached H_side(y).
    pub energy: f64,
}

impl ImpactState {
    pub fn new(dsys: &DiscontinuousSystem, y: PhasePoint, side: Side) -> Result<Self> {
        Self::with_region(dsys, y, side, side)
    }

    pub fn with_region(
        dsys: &DiscontinuousSystem,
        y: PhasePoint,
        side: Side,
        region: Side,
    ) -> Result<Self> {
        let data = dsys.side_data(side)?;
        let f = dsys.surface.value(&y.q);
        if f.abs() > IMPACT_SURFACE_TOL {
            return Err(Error::InvalidConfig(format!(
                "impact point is off the surface (f = {f:e})"
            )));
        }
        let residual = compatibility(&data.system, &data.constraints, &y.q)?.residual(&y.p);
        if !residual.is_empty() && residual.amax() > IMPACT_RESIDUAL_TOL {
            return Err(Error::InvalidConfig(format!(
                "impact point violates the arriving constraints (residual {:e})",
                residual.amax()
            )));
        }
        let energy = data.system.hamiltonian(&y)?;
        Ok(ImpactState {
            y,
            side,
            region,
            energy,
        })
    }
}

/// Dynamics a branch continues under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynamicsTag {
    /// The side's constrained field X_{H,C}.
    Constrained,
    /// The trace field on C^tr = C ∩ {d_qf = 0}.
    Trace,
    /// The trace field on C^{inst,tr}.
    InstTrace,
}

impl std::fmt::Display for DynamicsTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DynamicsTag::Constrained => "constrained",
            DynamicsTag::Trace => "trace",
            DynamicsTag::InstTrace => "inst_trace",
        })
    }
}

/// One decisive continuation of the trajectory.
#[derive(Clone, Debug)]
pub struct TransitionBranch {
    pub point: PhasePoint,
    /// Side whose data (system, constraints) governs the continued motion.
    pub side: Side,
    /// Geometric region the branch moves into (equals `side` unless
    /// constraints_follow_transition redirected the motion).
    pub region: Side,
    pub tag: DynamicsTag,
    /// in(j) or trapping; out points are never decisive.
    pub classification: BoundaryClass,
}

/// All decisive points of an impact; an empty branch list means the
/// trajectory is trapped on N with no decisive point.
#[derive(Clone, Debug)]
pub struct TransitionResult {
    pub branches: Vec<TransitionBranch>,
    /// Number of admissible-sequence nodes examined.
    pub steps: usize,
}

impl TransitionResult {
    pub fn is_trapped(&self) -> bool {
        self.branches.is_empty()
    }
}

/// Knobs of the decisive-point search.
#[derive(Clone, Debug)]
pub struct TransitionConfig {
    /// Cap on admissible-sequence nodes before giving up as undecided.
    pub max_iterations: usize,
    /// Two phase points closer than this (per component) count as revisited.
    pub cycle_tolerance: f64,
    /// Kinetic energy below this terminates the search as trapped.
    pub energy_floor: f64,
    /// Parameters handed to the boundary classifier.
    pub classify: IntegrationConfig,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        TransitionConfig {
            max_iterations: 64,
            cycle_tolerance: 1e-9,
            energy_floor: 1e-12,
            classify: IntegrationConfig::default(),
        }
    }
}

fn points_close(a: &PhasePoint, b: &PhasePoint, tol: f64) -> bool {
    (&a.q - &b.q).amax() <= tol && (&a.p - &b.p).amax() <= tol
}

/// The characteristic covector P_ε(d_qf) at the impact configuration; errors
/// when its 𝒢-norm is below the transversality tolerance. With m = 0 this is
/// d_qf itself.
pub fn characteristic_direction(
    dsys: &DiscontinuousSystem,
    side: Side,
    y: &PhasePoint,
) -> Result<DVector<f64>> {
    let data = dsys.side_data(side)?;
    let df = dsys.surface.gradient_at(&y.q);
    let comp = compatibility(&data.system, &data.constraints, &y.q)?;
    let pdf = comp.p_apply(&df);
    let norm2 = data.system.cometric_inner(&y.q, &pdf, &pdf)?;
    if norm2.sqrt() < TRANSVERSALITY_TOL {
        return Err(Error::TransversalityFailure {
            context: "characteristic direction",
            q: y.q.iter().copied().collect(),
            norm: norm2.sqrt(),
        });
    }
    Ok(pdf)
}

/// The nonzero solution c_{ε,2} of T̂_ε(y + c·P(df)) = T̂_ε(y):
/// c = −2𝒢(y, P(df)) / 𝒢(P(df), P(df)). Zero exactly at grazing impacts.
pub fn reflective_coefficient(
    dsys: &DiscontinuousSystem,
    side: Side,
    y: &PhasePoint,
) -> Result<f64> {
    let data = dsys.side_data(side)?;
    let pdf = characteristic_direction(dsys, side, y)?;
    let gg = data.system.cometric_inner(&y.q, &pdf, &pdf)?;
    let gy = data.system.cometric_inner(&y.q, &y.p, &pdf)?;
    Ok(-2.0 * gy / gg)
}

/// Real solutions c of H_ε̄(y + c·P_ε(d_qf)) = H_ε(y), ascending. Empty means
/// total reflection (negative discriminant). Requires the opposite side.
pub fn refractive_coefficients(
    dsys: &DiscontinuousSystem,
    from_side: Side,
    y: &PhasePoint,
) -> Result<Vec<f64>> {
    let from = dsys.side_data(from_side)?;
    let target = dsys.side_data(from_side.opposite())?;
    let pdf = characteristic_direction(dsys, from_side, y)?;
    let a = 0.5 * target.system.cometric_inner(&y.q, &pdf, &pdf)?;
    let b = target.system.cometric_inner(&y.q, &y.p, &pdf)?;
    let c0 = target.system.hamiltonian(y)? - from.system.hamiltonian(y)?;
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    let sd = disc.sqrt();
    // Numerically stable quadratic roots.
    let q = if b >= 0.0 {
        -0.5 * (b + sd)
    } else {
        -0.5 * (b - sd)
    };
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c0 / q);
    } else {
        roots.push(0.0);
    }
    roots.sort_by(|x, z| x.partial_cmp(z).expect("finite roots"));
    roots.dedup_by(|x, z| (*x - *z).abs() < 1e-14);
    Ok(roots)
}

/// Focusing of y onto a side's instantaneous fiber when one is declared,
/// else onto its constraint fiber.
fn side_focus(dsys: &DiscontinuousSystem, side: Side, y: &PhasePoint) -> Result<PhasePoint> {
    let data = dsys.side_data(side)?;
    let set = data.inst_constraints.as_ref().unwrap_or(&data.constraints);
    focusing_point(&data.system, set, y)
}

/// Trace-style constraint set used by the inelastic engines: the base set
/// with the surface row appended, unless d_qf already lies in the base row
/// span at q (then the arrest condition is implied and the base is returned
/// unchanged).
pub fn falling_constraints(
    system: &MechanicalSystem,
    base: &AffineConstraintSet,
    surface: &CriticalSurface,
    q: &DVector<f64>,
) -> Result<AffineConstraintSet> {
    let df = surface.gradient_at(q);
    let comp = compatibility(system, base, q)?;
    let pdf = comp.p_apply(&df);
    let norm2 = system.cometric_inner(q, &pdf, &pdf)?;
    if norm2.sqrt() < TRANSVERSALITY_TOL {
        Ok(base.clone())
    } else {
        Ok(trace_constraints(base, surface))
    }
}

/// Focusing of y onto a side's trace fiber (instantaneous-trace when an
/// instantaneous set is declared), together with the tag describing it.
fn falling_focus(
    dsys: &DiscontinuousSystem,
    side: Side,
    y: &PhasePoint,
) -> Result<(PhasePoint, DynamicsTag, AffineConstraintSet)> {
    let data = dsys.side_data(side)?;
    let (base, tag) = match &data.inst_constraints {
        Some(inst) => (inst, DynamicsTag::InstTrace),
        None => (&data.constraints, DynamicsTag::Trace),
    };
    let set = falling_constraints(&data.system, base, &dsys.surface, &y.q)?;
    let point = focusing_point(&data.system, &set, y)?;
    Ok((point, tag, set))
}

fn classify_constrained(
    dsys: &DiscontinuousSystem,
    side: Side,
    inside: Side,
    z: &PhasePoint,
    config: &TransitionConfig,
) -> Result<BoundaryClass> {
    let data = dsys.side_data(side)?;
    let field = PhaseField::Constrained(&data.system, &data.constraints);
    classify_boundary(&field, z, &dsys.surface, inside, &config.classify)
}

/// Decisive search for an elastic impact with a Hamiltonian smooth across N
/// (constraint sets change, g and V do not): alternate focusing onto the
/// opposite side's fiber until an in or trapping point appears; cycles and
/// kinetic-energy exhaustion terminate as trapped.
pub fn decisive_elastic_constraint_change(
    dsys: &DiscontinuousSystem,
    impact: &ImpactState,
    config: &TransitionConfig,
) -> Result<TransitionResult> {
    let follow = dsys.constraints_follow_transition();
    let mut visited: Vec<(Side, PhasePoint)> = vec![(impact.side, impact.y.clone())];
    let mut cur = impact.y.clone();
    let mut cur_side = impact.side;
    let mut steps = 0usize;
    loop {
        if steps >= config.max_iterations {
            return Err(Error::Undecided { iterations: steps });
        }
        steps += 1;
        let target = if follow {
            impact.region.opposite()
        } else {
            cur_side.opposite()
        };
        let z = side_focus(dsys, target, &cur)?;
        let data = dsys.side_data(target)?;
        if data.system.kinetic_energy(&z)? < config.energy_floor {
            return Ok(TransitionResult {
                branches: Vec::new(),
                steps,
            });
        }
        let class = classify_constrained(dsys, target, target, &z, config)?;
        match class {
            BoundaryClass::In { .. } | BoundaryClass::Trapping => {
                return Ok(TransitionResult {
                    branches: vec![TransitionBranch {
                        point: z,
                        side: target,
                        region: target,
                        tag: DynamicsTag::Constrained,
                        classification: class,
                    }],
                    steps,
                });
            }
            BoundaryClass::Out { order } if follow => {
                // The constraint change happens no matter what: the branch
                // keeps the new constraints but moves back into the arrival
                // region, where the same derivative data reads as entering.
                return Ok(TransitionResult {
                    branches: vec![TransitionBranch {
                        point: z,
                        side: target,
                        region: impact.region,
                        tag: DynamicsTag::Constrained,
                        classification: BoundaryClass::In { order },
                    }],
                    steps,
                });
            }
            BoundaryClass::Out { .. } => {
                if visited
                    .iter()
                    .any(|(s, v)| *s == target && points_close(v, &z, config.cycle_tolerance))
                {
                    return Ok(TransitionResult {
                        branches: Vec::new(),
                        steps,
                    });
                }
                visited.push((target, z.clone()));
                cur = z;
                cur_side = target;
            }
        }
    }
}

/// Decisive search for an elastic impact with a discontinuous Hamiltonian:
/// breadth-first over reflective and refractive candidate end points, each
/// focused onto its side's (instantaneous) fiber and classified; out points
/// re-enter the queue unless the linear-smooth shortcut applies.
pub fn decisive_elastic_discontinuous_h(
    dsys: &DiscontinuousSystem,
    impact: &ImpactState,
    config: &TransitionConfig,
) -> Result<TransitionResult> {
    let shortcut = dsys.linear_smooth_constraints
        && dsys
            .side_opt(Side::Minus)
            .is_none_or(|d| d.inst_constraints.is_none())
        && dsys
            .side_opt(Side::Plus)
            .is_none_or(|d| d.inst_constraints.is_none());
    let mut branches: Vec<TransitionBranch> = Vec::new();
    let mut visited: Vec<(Side, PhasePoint)> = vec![(impact.side, impact.y.clone())];
    let mut queue: VecDeque<(PhasePoint, Side)> = VecDeque::new();
    queue.push_back((impact.y.clone(), impact.side));
    let mut steps = 0usize;
    while let Some((cur, cur_side)) = queue.pop_front() {
        if steps >= config.max_iterations {
            return Err(Error::Undecided { iterations: steps });
        }
        steps += 1;
        let data = dsys.side_data(cur_side)?;
        let pdf = characteristic_direction(dsys, cur_side, &cur)?;
        let gg = data.system.cometric_inner(&cur.q, &pdf, &pdf)?;
        let gy = data.system.cometric_inner(&cur.q, &cur.p, &pdf)?;
        let c2 = -2.0 * gy / gg;
        let mut candidates: Vec<(PhasePoint, Side)> = Vec::new();
        // Reflective end point on the same side.
        let reflected = cur.with_momentum(&cur.p + &pdf * c2);
        candidates.push((side_focus(dsys, cur_side, &reflected)?, cur_side));
        // Trivial root c = 0 counts only when focusing displaces the point.
        let refocused = side_focus(dsys, cur_side, &cur)?;
        if !points_close(&refocused, &cur, config.cycle_tolerance) {
            candidates.push((refocused, cur_side));
        }
        // Refractive end points on the opposite side, when it exists.
        if dsys.side_opt(cur_side.opposite()).is_some() {
            for c in refractive_coefficients(dsys, cur_side, &cur)? {
                let refracted = cur.with_momentum(&cur.p + &pdf * c);
                candidates.push((
                    side_focus(dsys, cur_side.opposite(), &refracted)?,
                    cur_side.opposite(),
                ));
            }
        }
        for (z, z_side) in candidates {
            if visited
                .iter()
                .any(|(s, v)| *s == z_side && points_close(v, &z, config.cycle_tolerance))
            {
                continue;
            }
            visited.push((z_side, z.clone()));
            let z_data = dsys.side_data(z_side)?;
            if z_data.system.kinetic_energy(&z)? < config.energy_floor {
                continue;
            }
            let class = classify_constrained(dsys, z_side, z_side, &z, config)?;
            match class {
                BoundaryClass::In { .. } | BoundaryClass::Trapping => {
                    let duplicate = branches.iter().any(|b| {
                        b.side == z_side && points_close(&b.point, &z, config.cycle_tolerance)
                    });
                    if !duplicate {
                        branches.push(TransitionBranch {
                            point: z,
                            side: z_side,
                            region: z_side,
                            tag: DynamicsTag::Constrained,
                            classification: class,
                        });
                    }
                }
                BoundaryClass::Out { .. } => {
                    if !shortcut {
                        queue.push_back((z, z_side));
                    }
                }
            }
        }
    }
    Ok(TransitionResult { branches, steps })
}

/// Decisive point for an inelastic impact with a smooth Hamiltonian: the
/// focusing of y onto the opposite side's (instantaneous-)trace fiber; the
/// branch continues with the trace dynamics along N.
pub fn decisive_inelastic_constraint_change(
    dsys: &DiscontinuousSystem,
    impact: &ImpactState,
    config: &TransitionConfig,
) -> Result<TransitionResult> {
    let target = if dsys.constraints_follow_transition() {
        impact.region.opposite()
    } else {
        impact.side.opposite()
    };
    let (z, tag, set) = falling_focus(dsys, target, &impact.y)?;
    let data = dsys.side_data(target)?;
    let field = PhaseField::Constrained(&data.system, &set);
    let class = classify_boundary(&field, &z, &dsys.surface, target, &config.classify)?;
    Ok(TransitionResult {
        branches: vec![TransitionBranch {
            point: z,
            side: target,
            region: target,
            tag,
            classification: class,
        }],
        steps: 1,
    })
}

/// Decisive points for an inelastic impact with a discontinuous Hamiltonian:
/// reflective characteristic points fall onto the same side's trace fiber,
/// refractive ones onto the opposite side's; duplicates merge (for a boundary
/// system with linear constraints everything collapses to one point).
pub fn decisive_inelastic_discontinuous_h(
    dsys: &DiscontinuousSystem,
    impact: &ImpactState,
    config: &TransitionConfig,
) -> Result<TransitionResult> {
    let side = impact.side;
    let y = &impact.y;
    let pdf = characteristic_direction(dsys, side, y)?;
    let c2 = reflective_coefficient(dsys, side, y)?;
    let mut raw: Vec<(PhasePoint, Side)> = vec![
        (y.with_momentum(&y.p + &pdf * c2), side),
        (y.clone(), side),
    ];
    if dsys.side_opt(side.opposite()).is_some() {
        for c in refractive_coefficients(dsys, side, y)? {
            raw.push((y.with_momentum(&y.p + &pdf * c), side.opposite()));
        }
    }
    let mut branches: Vec<TransitionBranch> = Vec::new();
    let mut steps = 0usize;
    for (candidate, c_side) in raw {
        steps += 1;
        let (z, tag, set) = falling_focus(dsys, c_side, &candidate)?;
        let duplicate = branches
            .iter()
            .any(|b| b.side == c_side && points_close(&b.point, &z, config.cycle_tolerance));
        if duplicate {
            continue;
        }
        let data = dsys.side_data(c_side)?;
        let field = PhaseField::Constrained(&data.system, &set);
        let class = classify_boundary(&field, &z, &dsys.surface, c_side, &config.classify)?;
        branches.push(TransitionBranch {
            point: z,
            side: c_side,
            region: c_side,
            tag,
            classification: class,
        });
    }
    Ok(TransitionResult { branches, steps })
}

/// The Transition Principle dispatcher: routes to the decisive engine for the
/// system's mode and smoothness. An empty branch list means trapped.
pub fn transition(
    dsys: &DiscontinuousSystem,
    impact: &ImpactState,
    config: &TransitionConfig,
) -> Result<TransitionResult> {
    match (dsys.mode(), dsys.is_smooth()) {
        (ImpactMode::Elastic, true) => decisive_elastic_constraint_change(dsys, impact, config),
        (ImpactMode::Elastic, false) => decisive_elastic_discontinuous_h(dsys, impact, config),
        (ImpactMode::Inelastic, true) => {
            decisive_inelastic_constraint_change(dsys, impact, config)
        }
        (ImpactMode::Inelastic, false) => {
            decisive_inelastic_discontinuous_h(dsys, impact, config)
        }
    }
}
