use std::sync::Arc;

use mixfem::harness::study::measure_errors;
use mixfem::linalg::SolverSettings;
use mixfem::manufactured::ManufacturedProblem;
use mixfem::mesh::generate_unit_square_mesh;
use mixfem::spaces::{Discretization, MixedOrder};
use mixfem::timedisc::solve_time_discrete_reference;

/// `[velocity, concentration]` errors of the reference at the final time.
fn temporal_component(tau: f64, m: usize) -> [f64; 2] {
    let disc = Arc::new(Discretization::new(Arc::new(generate_unit_square_mesh(m).unwrap()), MixedOrder::Rt1).unwrap());
    let problem = Arc::new(ManufacturedProblem::square().to_problem());
    let reference = solve_time_discrete_reference(tau, 1.0, disc.clone(), problem, SolverSettings::default()).unwrap();
    let [u, c, _] = measure_errors(&disc, reference.final_state());
    [u, c]
}

#[test]
fn temporal_component_is_first_order_in_tau() {
    let coarse = temporal_component(0.1, 64);
    let fine = temporal_component(0.05, 64);
    for (name, k) in [("velocity", 0), ("concentration", 1)] {
        let ratio = coarse[k] / fine[k];
        println!("{name}: {:.4e} -> {:.4e}, ratio {ratio:.3}", coarse[k], fine[k]);
        assert!((ratio - 2.0).abs() <= 0.4, "{name} ratio {ratio:.3}");
    }
}

#[test]
#[ignore = "two fine reference runs, several minutes"]
fn reference_is_converged_in_space() {
    let a = temporal_component(0.1, 128);
    let b = temporal_component(0.1, 192);
    for k in 0..2 {
        let change = (a[k] - b[k]).abs() / b[k];
        println!("component {k}: {:.4e} vs {:.4e}, change {change:.3}", a[k], b[k]);
        assert!(change < 0.05);
    }
}
