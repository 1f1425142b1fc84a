//! Core constraint machinery on a hand-built system.
//!
//! Builds a three-dimensional mechanical system with a nontrivial constant
//! metric and one affine constraint, then walks through the objects every
//! impact computation rests on: the compatibility matrix, the complementary
//! projectors Q and P, the affine offset, and the focusing map that sends an
//! arbitrary momentum onto the constraint fiber. Run with
//!
//! ```bash
//! cargo run --example projections
//! ```

use nalgebra::{DMatrix, DVector};

use impulsive::constraints::{
    compatibility, constraint_residual, focusing_point, trace_constraints,
    AffineConstraintSet, CriticalSurface,
};
use impulsive::geometry::{ConfigChart, MechanicalSystem, PhasePoint};

fn print_matrix(label: &str, m: &DMatrix<f64>) {
    println!("{label}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:+.4}")).collect();
        println!("  [ {} ]", row.join("  "));
    }
}

fn main() -> impulsive::Result<()> {
    // Metric with coupled masses; one affine constraint x' + z' = 1.
    let chart = ConfigChart::new(vec!["x", "y", "z"])?;
    let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 3.0]);
    let system = MechanicalSystem::constant_metric(chart, g);
    let constraints = AffineConstraintSet::constant(
        DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]),
        DVector::from_vec(vec![-1.0]),
    );

    let q = DVector::zeros(3);
    let data = compatibility(&system, &constraints, &q)?;
    print_matrix("compatibility matrix B = J G^-1 J^t", data.b());
    print_matrix("momentum projector P", &data.p_matrix());
    print_matrix("complement Q = I - P", &(DMatrix::identity(3, 3) - data.p_matrix()));

    // P and Q are complementary projectors: P^2 = P and P Q = 0.
    let p_mat = data.p_matrix();
    let q_mat = DMatrix::identity(3, 3) - &p_mat;
    println!(
        "idempotence |P^2 - P| = {:.3e}, complementarity |P Q| = {:.3e}",
        (&p_mat * &p_mat - &p_mat).amax(),
        (&p_mat * &q_mat).amax()
    );

    // The affine offset shifts the projection so the fiber satisfies the
    // inhomogeneous constraint J G p + mu = 0 exactly.
    let offset = data.offset_momentum();
    println!("affine offset Q(Y) = {:?}", offset.as_slice());

    // Focusing: project an arbitrary momentum onto the constraint fiber.
    let u = PhasePoint::new(q.clone(), DVector::from_vec(vec![1.0, -0.5, 2.0]))?;
    let focused = focusing_point(&system, &constraints, &u)?;
    let residual_before = constraint_residual(&system, &constraints, &u)?;
    let residual_after = constraint_residual(&system, &constraints, &focused)?;
    println!(
        "focusing: residual {:+.4} -> {:+.3e}",
        residual_before[0], residual_after[0]
    );
    println!("  focused p = {:?}", focused.p.as_slice());

    // Duality: P is self-adjoint for the cometric pairing, so moving it
    // across the bracket leaves the pairing unchanged.
    let w = DVector::from_vec(vec![0.3, 0.7, -1.1]);
    let cometric = data.cometric();
    let lhs = (data.p_apply(&u.p)).dot(&(cometric * &w));
    let rhs = (cometric * data.p_apply(&w)).dot(&u.p);
    println!("duality |<P u, w> - <u, P w>| = {:.3e}", (lhs - rhs).abs());

    // Trace set: the constraint set restricted to a surface appends the
    // surface gradient as one more row, pinning motion to the surface.
    let surface = CriticalSurface::new(|q: &DVector<f64>| q[1] - 2.0);
    let trace = trace_constraints(&constraints, &surface);
    println!(
        "trace set: {} rows (constraints + surface gradient)",
        trace.count()
    );
    let focused = focusing_point(&system, &trace, &u)?;
    let residual = constraint_residual(&system, &trace, &focused)?;
    println!(
        "  focused residual = {:.3e}, surface rate = {:.3e}",
        residual.amax(),
        residual[residual.len() - 1]
    );
    Ok(())
}
