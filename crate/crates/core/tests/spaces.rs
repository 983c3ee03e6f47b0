use std::sync::Arc;

use mixfem::geometry::{dot, mat_vec};
use mixfem::harness::{l2_error_dg, l2_error_p1, l2_error_rt, least_squares_rate};
use mixfem::linalg::SolverSettings;
use mixfem::manufactured::{self, ManufacturedProblem};
use mixfem::mesh::{generate_disk_mesh, generate_unit_square_mesh, Mesh, PointLocator};
use mixfem::quadrature::TriangleRule;
use mixfem::scheme::{init_state, step_pressure_velocity, RunConfig};
use mixfem::spaces::{
    elliptic_project_p1, interpolate_p1, l2_project_p0, rt_project, Discretization, DofMapDg, DofMapP1, DofMapRt,
    MixedOrder,
};
use mixfem::{Point, Tensor2};
use proptest::prelude::*;

fn square(m: usize) -> Arc<Mesh> {
    Arc::new(generate_unit_square_mesh(m).unwrap())
}

fn mean_over(mesh: &Mesh, t: usize, rule: &TriangleRule, f: impl Fn(Point) -> f64) -> f64 {
    rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t))
        .iter()
        .map(|&(x, w)| w * f(x))
        .sum::<f64>()
        / mesh.area(t)
}

#[test]
fn commuting_diagram_for_the_example_velocity() {
    let mesh = square(8);
    let oracle = TriangleRule::conical(10);
    for order in [MixedOrder::Rt0, MixedOrder::Rt1] {
        let map = DofMapRt::new(mesh.clone(), order).unwrap();
        let q = rt_project(|x| manufactured::exact_u(x, 1.0), &map).unwrap();
        let worst = (0..mesh.num_triangles())
            .map(|t| (map.divergence_mean(&q, t) - mean_over(&mesh, t, &oracle, |x| manufactured::forcing_f(x, 1.0))).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "{order:?}: {worst:e}");
    }
}

#[test]
fn interpolant_divergence_is_projection_of_source_on_the_disk() {
    let mesh = Arc::new(generate_disk_mesh(32).unwrap());
    let map = DofMapRt::new(mesh.clone(), MixedOrder::Rt1).unwrap();
    let q = rt_project(|x| manufactured::exact_u(x, 0.5), &map).unwrap();
    let oracle = TriangleRule::conical(10);
    for t in 0..mesh.num_triangles() {
        let d = map.divergence_mean(&q, t);
        let f = mean_over(&mesh, t, &oracle, |x| manufactured::forcing_f(x, 0.5));
        assert!((d - f).abs() <= 1e-9 * f.abs().max(1.0), "triangle {t}: {d} vs {f}");
    }
}

fn cubic(c: &[f64; 20]) -> impl Fn(Point) -> Point + '_ {
    move |x: Point| {
        let m = [1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1], x[0].powi(3), x[0] * x[0] * x[1], x[0] * x[1] * x[1], x[1].powi(3)];
        let a: f64 = (0..10).map(|i| c[i] * m[i]).sum();
        let b: f64 = (0..10).map(|i| c[10 + i] * m[i]).sum();
        [a, b]
    }
}

fn cubic_divergence(c: &[f64; 20], x: Point) -> f64 {
    // d/dx of the first component plus d/dy of the second
    let (px, py) = (x[0], x[1]);
    let dx = c[1] + 2.0 * c[3] * px + c[4] * py + 3.0 * c[6] * px * px + 2.0 * c[7] * px * py + c[8] * py * py;
    let dy = c[12] + c[14] * px + 2.0 * c[15] * py + c[17] * px * px + 2.0 * c[18] * px * py + 3.0 * c[19] * py * py;
    dx + dy
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn commuting_diagram_for_random_cubics(
        coeffs in prop::array::uniform20(-2.0f64..2.0),
        m in 1usize..6,
        disk in any::<bool>(),
        rt1 in any::<bool>(),
    ) {
        let mesh = Arc::new(if disk { generate_disk_mesh(8 * m + 8).unwrap() } else { generate_unit_square_mesh(m).unwrap() });
        let order = if rt1 { MixedOrder::Rt1 } else { MixedOrder::Rt0 };
        let map = DofMapRt::new(mesh.clone(), order).unwrap();
        let q = rt_project(cubic(&coeffs), &map).unwrap();
        let rule = TriangleRule::seven_point();
        for t in 0..mesh.num_triangles() {
            let exact = mean_over(&mesh, t, &rule, |x| cubic_divergence(&coeffs, x));
            prop_assert!((map.divergence_mean(&q, t) - exact).abs() <= 1e-9);
        }
    }

    #[test]
    fn cell_average_projection_is_orthogonal(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.5f64..4.0, m in 1usize..8) {
        let mesh = square(m);
        let phi = move |x: Point| (k * x[0]).sin() * a + (b * x[1]).exp();
        let proj = l2_project_p0(phi, mesh.clone());
        let rule = TriangleRule::seven_point();
        for t in 0..mesh.num_triangles() {
            let defect: f64 = rule
                .on_triangle(mesh.triangle_vertices(t), mesh.area(t))
                .iter()
                .map(|&(x, w)| w * (phi(x) - proj.values[t]))
                .sum();
            let scale: f64 = rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t)).iter().map(|&(x, w)| w * phi(x).abs()).sum();
            prop_assert!(defect.abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn p1_interpolation_reproduces_affine_functions(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, m in 1usize..10) {
        let map = DofMapP1::new(square(m));
        let f = |x: Point| a + b * x[0] + c * x[1];
        let field = interpolate_p1(f, &map).unwrap();
        let err = l2_error_p1(&field, &map, f, &TriangleRule::seven_point());
        prop_assert!(err <= 1e-12 * (1.0 + a.abs() + b.abs() + c.abs()));
    }
}

#[test]
fn interpolation_examples() {
    let map = DofMapP1::new(square(4));
    let field = interpolate_p1(|x| x[0] + x[1], &map).unwrap();
    let v = map.mesh().vertices().iter().position(|&p| p == [0.25, 0.5]).unwrap();
    assert_eq!(field.values[v], 0.75);
    let c0 = interpolate_p1(|x| manufactured::exact_c(x, 0.0), &map).unwrap();
    assert!(c0.values.iter().all(|&c| c == 0.1));
}

#[test]
fn cell_average_matches_a_sixteen_point_oracle() {
    let mesh = square(4);
    let f = |x: Point| x[0] * x[0] * x[1];
    let proj = l2_project_p0(f, mesh.clone());
    let (t, _) = PointLocator::new(&mesh).locate([0.1, 0.1]).unwrap();
    let oracle = mean_over(&mesh, t, &TriangleRule::conical(4), f);
    assert!((proj.values[t] - oracle).abs() <= 1e-6 * oracle.abs());
}

/// Velocity of the first step of the example with a unit step, used as the
/// coefficient of the weighted elliptic projection.
fn first_step_dispersion(mesh: Arc<Mesh>) -> (Arc<Discretization>, impl Fn(usize, Point) -> Tensor2 + Sync) {
    let disc = Arc::new(Discretization::new(mesh, MixedOrder::Rt1).unwrap());
    let problem = Arc::new(ManufacturedProblem::square().to_problem());
    let config = RunConfig::new(disc.clone(), problem.clone(), 1.0, 1.0).unwrap();
    let c0 = init_state(&config).unwrap().concentration;
    let u1 = step_pressure_velocity(&c0, 1.0, &config).unwrap().velocity;
    let d = disc.clone();
    let tensor = move |t: usize, x: Point| problem.coefficients.dispersion(d.velocity().eval(&u1, t, x));
    (disc, tensor)
}

#[test]
fn weighted_elliptic_projection_is_galerkin_orthogonal_and_mean_free() {
    let (disc, tensor) = first_step_dispersion(square(8));
    let map = disc.p1();
    let rule = TriangleRule::seven_point();
    let v = |x: Point| manufactured::exact_c(x, 1.0);
    let w = elliptic_project_p1(v, |x| manufactured::grad_c(x, 1.0), &tensor, map, &rule, &SolverSettings::default()).unwrap();
    let mesh = map.mesh();
    let mut residual = vec![0.0; map.n_dofs()];
    let mut mean = 0.0;
    let mut scale = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = map.basis_gradients(t);
        let gw = map.gradient(&w, t);
        for (x, wq) in rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
            let gc = manufactured::grad_c(x, 1.0);
            let flux = mat_vec(&tensor(t, x), [gc[0] - gw[0], gc[1] - gw[1]]);
            for i in 0..3 {
                residual[tri[i]] += wq * dot(flux, g[i]);
            }
            mean += wq * (v(x) - map.eval(&w, t, x));
            scale += wq * v(x).abs();
        }
    }
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    assert!(worst <= 1e-10, "orthogonality defect {worst:e}");
    assert!(mean.abs() <= 1e-10 * scale, "mean defect {mean:e}");
}

#[test]
fn projections_converge_at_second_order() {
    let rule = TriangleRule::seven_point();
    let mut h = Vec::new();
    let (mut e_elliptic, mut e_pressure, mut e_velocity) = (Vec::new(), Vec::new(), Vec::new());
    for m in [8, 16, 32] {
        let mesh = square(m);
        h.push(mesh.h_max());
        let (disc, tensor) = first_step_dispersion(mesh.clone());
        let w = elliptic_project_p1(
            |x| manufactured::exact_c(x, 1.0),
            |x| manufactured::grad_c(x, 1.0),
            &tensor,
            disc.p1(),
            &rule,
            &SolverSettings::default(),
        )
        .unwrap();
        e_elliptic.push(l2_error_p1(&w, disc.p1(), |x| manufactured::exact_c(x, 1.0), &rule));

        let dg = DofMapDg::new(mesh.clone(), 1, false).unwrap();
        let p = dg.l2_project(|x| manufactured::exact_p(x, 1.0));
        e_pressure.push(l2_error_dg(&p, &dg, |x| manufactured::exact_p(x, 1.0), &rule));

        let rt = DofMapRt::new(mesh, MixedOrder::Rt1).unwrap();
        let q = rt_project(|x| manufactured::exact_u(x, 1.0), &rt).unwrap();
        e_velocity.push(l2_error_rt(&q, &rt, |x| manufactured::exact_u(x, 1.0), &rule));
    }
    for (name, e) in [("elliptic", &e_elliptic), ("pressure", &e_pressure), ("velocity", &e_velocity)] {
        let r = least_squares_rate(&h, e).unwrap();
        assert!((r - 2.0).abs() <= 0.2, "{name} projection rate {r:.3} from {e:?}");
    }
}
