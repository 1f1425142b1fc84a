//! Simulation of mechanical Hamiltonian systems subject to affine
//! nonholonomic constraints and impulsive transitions across a critical
//! hypersurface.

pub mod constraints;
pub mod driver;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod impact;
pub mod numdiff;
pub mod scenarios;

pub use constraints::{
    affine_offset, compatibility, constraint_residual, focusing_point, instantaneous_projectors,
    project_p, project_q, trace_constraints, AffineConstraintSet, CompatibilityData,
    CriticalSurface, Side,
};
pub use dynamics::{
    classify_boundary, constrained_field, free_field, integrate, BoundaryClass, IntegrationConfig,
    PhaseField, PhaseVelocity, TerminalCause, TrajectorySegment,
};
pub use driver::{run, validate, RunConfig, RunSummary, ValidationReport};
pub use error::{Error, Result};
pub use expr::Expr;
pub use geometry::{ConfigChart, MechanicalSystem, PhasePoint};
pub use impact::{
    characteristic_direction, falling_constraints, reflective_coefficient,
    refractive_coefficients, transition, DiscontinuousSystem, DynamicsTag, ImpactMode,
    ImpactState, SideData, TransitionBranch, TransitionConfig, TransitionResult,
};
pub use scenarios::Scenario;
