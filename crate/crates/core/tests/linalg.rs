use std::sync::Arc;

use mixfem::linalg::{residual_norm, saddle_matrix, solve_saddle, SolverSettings, SparseMatrix};
use mixfem::manufactured::ManufacturedProblem;
use mixfem::mesh::{generate_disk_mesh, generate_unit_square_mesh, Mesh};
use mixfem::scheme::{divergence_load, divergence_matrix, init_state, step, velocity_mass_matrix, RunConfig};
use mixfem::spaces::{Discretization, FieldP1, MixedOrder};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Blocks {
    m: SparseMatrix,
    b: SparseMatrix,
    rhs_u: Vec<f64>,
    rhs_p: Vec<f64>,
    mean: Vec<f64>,
}

fn config(mesh: Mesh, order: MixedOrder) -> RunConfig {
    let disc = Arc::new(Discretization::new(Arc::new(mesh), order).unwrap());
    RunConfig::new(disc, Arc::new(ManufacturedProblem::square().to_problem()), 0.25, 1.0).unwrap()
}

/// The velocity-pressure system of the second step, with boundary velocity
/// dofs removed and the pressure rows negated, as the scheme assembles it.
fn step_blocks(config: &RunConfig) -> Blocks {
    let disc = &*config.discretization;
    let (state, _) = step(&init_state(config).unwrap(), config).unwrap();
    let vel = disc.velocity();
    let mut interior = vec![true; vel.n_dofs()];
    for &d in vel.boundary_dofs() {
        interior[d] = false;
    }
    let index: Vec<usize> = {
        let mut k = 0;
        interior
            .iter()
            .map(|&i| {
                let r = k;
                k += usize::from(i);
                if i { r } else { usize::MAX }
            })
            .collect()
    };
    let ni = interior.iter().filter(|&&i| i).count();
    let mass = velocity_mass_matrix(disc, &config.problem, &state.concentration).unwrap();
    let m: Vec<_> = mass
        .iter()
        .filter(|&(i, j, _)| interior[i] && interior[j])
        .map(|(i, j, v)| (index[i], index[j], v))
        .collect();
    let div = divergence_matrix(disc).unwrap();
    let b: Vec<_> = div.iter().filter(|&(_, j, _)| interior[j]).map(|(q, j, v)| (q, index[j], -v)).collect();
    let np = disc.pressure().n_dofs();
    let mut rhs_p: Vec<f64> = divergence_load(disc, &config.problem, config.time(2), &config.source_quadrature)
        .iter()
        .map(|v| -v)
        .collect();
    let mesh = disc.mesh();
    let defect: f64 = (0..mesh.num_triangles()).map(|t| rhs_p[disc.pressure().dof(t, 0)]).sum();
    for t in 0..mesh.num_triangles() {
        rhs_p[disc.pressure().dof(t, 0)] -= defect * mesh.area(t) / mesh.total_area();
    }
    Blocks {
        m: SparseMatrix::from_triplets(ni, ni, &m).unwrap(),
        b: SparseMatrix::from_triplets(np, ni, &b).unwrap(),
        rhs_u: vec![0.0; ni],
        rhs_p,
        mean: disc.pressure().mean_weights(),
    }
}

fn full_rhs(blocks: &Blocks) -> Vec<f64> {
    let mut rhs = blocks.rhs_u.clone();
    rhs.extend_from_slice(&blocks.rhs_p);
    rhs.push(0.0);
    rhs
}

#[test]
fn saddle_solution_multiplies_back() {
    for (mesh, order) in [
        (generate_unit_square_mesh(4).unwrap(), MixedOrder::Rt1),
        (generate_unit_square_mesh(8).unwrap(), MixedOrder::Rt1),
        (generate_unit_square_mesh(8).unwrap(), MixedOrder::Rt0),
        (generate_disk_mesh(16).unwrap(), MixedOrder::Rt1),
    ] {
        let blocks = step_blocks(&config(mesh, order));
        let settings = SolverSettings::default();
        let sol = solve_saddle(&blocks.m, &blocks.b, &blocks.rhs_u, &blocks.rhs_p, &blocks.mean, &settings).unwrap();
        let a = saddle_matrix(&blocks.m, &blocks.b, &blocks.mean).unwrap();
        let mut x = sol.u.clone();
        x.extend_from_slice(&sol.p);
        x.push(sol.multiplier);
        let r = residual_norm(&a, &x, &full_rhs(&blocks));
        assert!(r <= 1e-10, "{order:?}: residual {r:e}");
        let mean: f64 = blocks.mean.iter().zip(&sol.p).map(|(w, p)| w * p).sum();
        assert!(mean.abs() <= 1e-10, "pressure mean {mean:e}");
    }
}

#[test]
fn saddle_solution_is_permutation_equivariant() {
    let blocks = step_blocks(&config(generate_unit_square_mesh(4).unwrap(), MixedOrder::Rt1));
    let settings = SolverSettings::default();
    let base = solve_saddle(&blocks.m, &blocks.b, &blocks.rhs_u, &blocks.rhs_p, &blocks.mean, &settings).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let mut perm_u: Vec<usize> = (0..blocks.m.nrows()).collect();
        perm_u.shuffle(&mut rng);
        let mut perm_p: Vec<usize> = (0..blocks.b.nrows()).collect();
        perm_p.shuffle(&mut rng);
        // perm[new] = old
        let mut inv_u = vec![0; perm_u.len()];
        for (new, &old) in perm_u.iter().enumerate() {
            inv_u[old] = new;
        }
        let mut inv_p = vec![0; perm_p.len()];
        for (new, &old) in perm_p.iter().enumerate() {
            inv_p[old] = new;
        }
        let m = blocks.m.permute_symmetric(&inv_u);
        let b_entries: Vec<_> = blocks.b.iter().map(|(q, j, v)| (inv_p[q], inv_u[j], v)).collect();
        let b = SparseMatrix::from_triplets(blocks.b.nrows(), blocks.b.ncols(), &b_entries).unwrap();
        let rhs_u: Vec<f64> = perm_u.iter().map(|&o| blocks.rhs_u[o]).collect();
        let rhs_p: Vec<f64> = perm_p.iter().map(|&o| blocks.rhs_p[o]).collect();
        let mean: Vec<f64> = perm_p.iter().map(|&o| blocks.mean[o]).collect();
        let sol = solve_saddle(&m, &b, &rhs_u, &rhs_p, &mean, &settings).unwrap();
        let scale_u = base.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale_p = base.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (new, &old) in perm_u.iter().enumerate() {
            assert!((sol.u[new] - base.u[old]).abs() <= 1e-12 * scale_u, "{} vs {}", sol.u[new], base.u[old]);
        }
        for (new, &old) in perm_p.iter().enumerate() {
            assert!((sol.p[new] - base.p[old]).abs() <= 1e-12 * scale_p);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weighted_velocity_mass_is_symmetric_positive_definite(
        values in prop::collection::vec(-3.0f64..3.0, 25),
        rt1 in any::<bool>(),
    ) {
        let order = if rt1 { MixedOrder::Rt1 } else { MixedOrder::Rt0 };
        let config = config(generate_unit_square_mesh(4).unwrap(), order);
        let disc = &*config.discretization;
        let c = FieldP1 { values };
        let mass = velocity_mass_matrix(disc, &config.problem, &c).unwrap();
        prop_assert!(mass.asymmetry() <= 1e-14 * mass.max_abs());
        prop_assert!(mass.cholesky_succeeds());
    }

    #[test]
    fn dispersion_stiffness_is_semidefinite_with_constant_kernel(
        coeffs in prop::array::uniform4(-5.0f64..5.0),
        probe in prop::collection::vec(-1.0f64..1.0, 81),
    ) {
        let mesh = Arc::new(generate_unit_square_mesh(8).unwrap());
        let disc = Discretization::new(mesh, MixedOrder::Rt1).unwrap();
        let coefficients = ManufacturedProblem::square().coefficients();
        let tensor = move |_: usize, x: [f64; 2]| {
            coefficients.dispersion([coeffs[0] + coeffs[1] * x[1], coeffs[2] * x[0] + coeffs[3]])
        };
        let k = disc.p1().stiffness_matrix(&tensor, disc.quadrature()).unwrap();
        prop_assert!(k.asymmetry() <= 1e-14 * k.max_abs());
        let ones = vec![1.0; k.nrows()];
        let k1 = k.mul_vec(&ones);
        prop_assert!(k1.iter().all(|v| v.abs() <= 1e-12 * k.max_abs()));
        let kp = k.mul_vec(&probe);
        let energy: f64 = kp.iter().zip(&probe).map(|(a, b)| a * b).sum();
        prop_assert!(energy >= -1e-12 * k.max_abs());
        // Adding a mass term makes it definite.
        let shifted = SparseMatrix::from_triplets(
            k.nrows(),
            k.ncols(),
            &k.iter().chain(disc.p1().mass_matrix().iter()).collect::<Vec<_>>(),
        )
        .unwrap();
        prop_assert!(shifted.cholesky_succeeds());
    }
}

#[test]
fn exact_velocity_satisfies_the_compatibility_of_the_example() {
    let mesh = generate_unit_square_mesh(16).unwrap();
    let config = config(mesh, MixedOrder::Rt1);
    let disc = &*config.discretization;
    let load = divergence_load(disc, &config.problem, 1.0, &config.source_quadrature);
    let total: f64 = (0..disc.mesh().num_triangles()).map(|t| load[disc.pressure().dof(t, 0)]).sum();
    // The source integrates to the boundary flux of the exact velocity,
    // which vanishes on the unit square.
    assert!(total.abs() <= 1e-12, "net source {total:e}");
}
