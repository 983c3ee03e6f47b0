//! Linearized semi-implicit Euler time stepping for the mixed
//! pressure-velocity / Galerkin concentration system.
//!
//! Each step first solves the mixed problem
//!
//! ```text
//! (mu(C^n)/k U^{n+1}, v) - (P^{n+1}, div v) = 0
//! (div U^{n+1}, phi)                        = (q^I - q^P + f, phi)
//! ```
//!
//! with the viscosity lagged at `C^n`, and then the linear concentration
//! equation
//!
//! ```text
//! (phi D_t C^{n+1}, w) + (D(U^{n+1}) grad C^{n+1}, grad w)
//!     + (U^{n+1} . grad C^{n+1}, w) + (q^P C^{n+1}, w)
//!     = (c^ q^I + g, w) + <D grad c . n, w>_boundary
//! ```
//!
//! Normal velocity on the boundary is an essential condition on the
//! Raviart-Thomas boundary dofs.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, mat_vec, Point};
use crate::linalg::{solve, solve_saddle, LinearSystem, SolverSettings, SparseMatrix, TripletBuilder};
use crate::problem::Problem;
use crate::quadrature::{integrate_segment, TriangleRule};
use crate::spaces::{interpolate_p1, Discretization, FieldDg, FieldP1, FieldRt};

/// Gauss points per direction of the conical rule used for source
/// integrals unless configured otherwise (64 points, degree 14).
pub const DEFAULT_SOURCE_POINTS: usize = 8;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tau: f64,
    pub final_time: f64,
    pub discretization: Arc<Discretization>,
    pub problem: Arc<Problem>,
    pub solver: SolverSettings,
    /// Keep diagnostics of every `cadence`-th step (and the last); 0 keeps
    /// only the last.
    pub cadence: usize,
    /// Rule for the load integrals of the source terms. Matrices use the
    /// discretization rule.
    pub source_quadrature: TriangleRule,
}

impl RunConfig {
    pub fn new(discretization: Arc<Discretization>, problem: Arc<Problem>, tau: f64, final_time: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {final_time}")));
        }
        if (final_time / tau).round() < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "final time {final_time} is shorter than half a step {tau}"
            )));
        }
        let source_quadrature = TriangleRule::conical(DEFAULT_SOURCE_POINTS);
        Ok(Self {
            tau,
            final_time,
            discretization,
            problem,
            solver: SolverSettings::default(),
            cadence: 1,
            source_quadrature,
        })
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence;
        self
    }

    pub fn with_source_quadrature(mut self, rule: TriangleRule) -> Self {
        self.source_quadrature = rule;
        self
    }

    /// `N = round(T / tau)`.
    pub fn num_steps(&self) -> usize {
        (self.final_time / self.tau).round() as usize
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Solution at time level `n`. Velocity and pressure are `None` at `n = 0`;
/// the scheme never reads them.
#[derive(Debug, Clone)]
pub struct DiscreteState {
    pub step: usize,
    pub time: f64,
    pub concentration: FieldP1,
    pub velocity: Option<FieldRt>,
    pub pressure: Option<FieldDg>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub max_concentration: f64,
    /// `max_T |mean_T div U - mean_T (q^I - q^P + f)|`.
    pub divergence_residual: f64,
    /// `integral P`.
    pub pressure_mean: f64,
    /// `integral (q^I - q^P + f) - integral_boundary u . n` as seen by the
    /// discrete system; removed before the solve.
    pub source_imbalance: f64,
}

#[derive(Debug, Clone)]
pub struct PressureVelocity {
    pub velocity: FieldRt,
    pub pressure: FieldDg,
    pub source_imbalance: f64,
    /// Multiplier of the mean constraint (zero up to round-off once the data
    /// are made compatible).
    pub multiplier: f64,
    /// Divergence load `(q^I - q^P + f, psi)` before the compatibility
    /// correction.
    pub divergence_load: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: DiscreteState,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// `C^0` is the nodal interpolant of the initial concentration.
pub fn init_state(config: &RunConfig) -> Result<DiscreteState> {
    let init = config.problem.initial_concentration.clone();
    Ok(DiscreteState {
        step: 0,
        time: 0.0,
        concentration: interpolate_p1(|x| init(x), config.discretization.p1())?,
        velocity: None,
        pressure: None,
    })
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            location: format!("{what} dof {i}"),
            value: values[i],
        }),
        None => Ok(()),
    }
}

/// Weighted velocity mass matrix `(mu(C)/k phi_j, phi_i)`.
pub fn velocity_mass_matrix(disc: &Discretization, problem: &Problem, concentration: &FieldP1) -> Result<SparseMatrix> {
    let mesh = disc.mesh();
    let vel = disc.velocity();
    let p1 = disc.p1();
    let rule = disc.quadrature();
    let n = vel.n_local();
    let coeffs = &problem.coefficients;
    let locals: Vec<Vec<f64>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let verts = mesh.triangle_vertices(t);
            let area = mesh.area(t);
            let mut local = vec![0.0; n * n];
            for (l, w) in rule.iter() {
                let x = crate::quadrature::from_barycentric(verts, l);
                let c = p1.eval_barycentric(concentration, t, l);
                let weight = w * area * coeffs.resistance(x, c);
                let phi = vel.basis(t, x);
                for i in 0..n {
                    for j in i..n {
                        local[i * n + j] += weight * dot(phi[i], phi[j]);
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    local[i * n + j] = local[j * n + i];
                }
            }
            local
        })
        .collect();
    let mut b = TripletBuilder::with_capacity(vel.n_dofs(), vel.n_dofs(), n * n * mesh.num_triangles());
    for (t, local) in locals.iter().enumerate() {
        let dofs = vel.local_dofs(t);
        for i in 0..n {
            for j in 0..n {
                b.add(dofs[i], dofs[j], local[i * n + j]);
            }
        }
    }
    b.build()
}

/// Divergence coupling `B[q][i] = (div phi_i, psi_q)`.
pub fn divergence_matrix(disc: &Discretization) -> Result<SparseMatrix> {
    let mesh = disc.mesh();
    let vel = disc.velocity();
    let pres = disc.pressure();
    let rule = disc.quadrature();
    let (n, np) = (vel.n_local(), pres.n_local());
    let mut b = TripletBuilder::with_capacity(pres.n_dofs(), vel.n_dofs(), n * np * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        // Gram matrix of the 1, xi, eta basis, in which divergences are stored.
        let mut gram = [[0.0; 3]; 3];
        for (x, w) in rule.on_triangle(mesh.triangle_vertices(t), mesh.area(t)) {
            let q = pres.basis(t, x);
            for r in 0..3 {
                for c in 0..3 {
                    gram[r][c] += w * q[r] * q[c];
                }
            }
        }
        let div = vel.basis_divergence(t);
        let dofs = vel.local_dofs(t);
        for q in 0..np {
            for (i, &g) in dofs.iter().enumerate() {
                let v: f64 = (0..3).map(|k| gram[q][k] * div[i][k]).sum();
                if v != 0.0 {
                    b.add(pres.dof(t, q), g, v);
                }
            }
        }
    }
    b.build()
}

/// `(q^I - q^P + f, psi_q)` at time `t`.
pub fn divergence_load(disc: &Discretization, problem: &Problem, t: f64, rule: &TriangleRule) -> Vec<f64> {
    let mesh = disc.mesh();
    let pres = disc.pressure();
    let np = pres.n_local();
    let locals: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|tri| {
            let mut local = [0.0; 3];
            for (x, w) in rule.on_triangle(mesh.triangle_vertices(tri), mesh.area(tri)) {
                let q = pres.basis(tri, x);
                let s = problem.divergence_source(x, t);
                for j in 0..np {
                    local[j] += w * s * q[j];
                }
            }
            local
        })
        .collect();
    let mut out = vec![0.0; pres.n_dofs()];
    for (tri, local) in locals.iter().enumerate() {
        for j in 0..np {
            out[pres.dof(tri, j)] = local[j];
        }
    }
    out
}

/// Solves the mixed problem for `(U^{n+1}, P^{n+1})` with the viscosity
/// evaluated at `c_n`.
pub fn step_pressure_velocity(c_n: &FieldP1, t_next: f64, config: &RunConfig) -> Result<PressureVelocity> {
    check_finite(&c_n.values, "concentration")?;
    let disc = &*config.discretization;
    let problem = &*config.problem;
    let mesh = disc.mesh();
    let vel = disc.velocity();
    let pres = disc.pressure();
    let nu = vel.n_dofs();
    let np = pres.n_dofs();

    let mut fixed = vec![0.0; nu];
    let mut is_fixed = vec![false; nu];
    let bdofs = vel.boundary_dofs();
    if problem.boundary.flux_n.is_some() {
        let values = vel.boundary_values(|x, n| problem.boundary.flux(x, n, t_next));
        for (&d, v) in bdofs.iter().zip(values) {
            fixed[d] = v;
        }
    }
    for &d in bdofs {
        is_fixed[d] = true;
    }
    let mut reduced = vec![usize::MAX; nu];
    let mut free = Vec::with_capacity(nu - bdofs.len());
    for d in 0..nu {
        if !is_fixed[d] {
            reduced[d] = free.len();
            free.push(d);
        }
    }
    let ni = free.len();

    let mass = velocity_mass_matrix(disc, problem, c_n)?;
    let mut rhs_u = vec![0.0; ni];
    let mut m_entries = Vec::with_capacity(mass.nnz());
    for (i, j, v) in mass.iter() {
        if is_fixed[i] {
            continue;
        }
        if is_fixed[j] {
            rhs_u[reduced[i]] -= v * fixed[j];
        } else {
            m_entries.push((reduced[i], reduced[j], v));
        }
    }
    let m_block = SparseMatrix::from_triplets(ni, ni, &m_entries)?;

    // The pressure rows are negated so the block system stays symmetric:
    // M U - B^T P = 0 and -B U = -F.
    let load = divergence_load(disc, problem, t_next, &config.source_quadrature);
    let mut rhs_p: Vec<f64> = load.iter().map(|v| -v).collect();
    let div = divergence_matrix(disc)?;
    let mut b_entries = Vec::with_capacity(div.nnz());
    for (q, j, v) in div.iter() {
        if is_fixed[j] {
            rhs_p[q] += v * fixed[j];
        } else {
            b_entries.push((q, reduced[j], -v));
        }
    }
    let b_block = SparseMatrix::from_triplets(np, ni, &b_entries)?;

    // Interior dofs carry no net flux, so the constant pressure rows of the
    // right-hand side must sum to zero; spread any defect by area.
    let mean = pres.mean_weights();
    let defect: f64 = (0..mesh.num_triangles()).map(|t| rhs_p[pres.dof(t, 0)]).sum();
    let total_area = mesh.total_area();
    for t in 0..mesh.num_triangles() {
        rhs_p[pres.dof(t, 0)] -= defect * mesh.area(t) / total_area;
    }

    let sol = solve_saddle(&m_block, &b_block, &rhs_u, &rhs_p, &mean, &config.solver)?;
    let mut u = fixed;
    for (r, &d) in free.iter().enumerate() {
        u[d] = sol.u[r];
    }
    check_finite(&u, "velocity")?;
    Ok(PressureVelocity {
        velocity: FieldRt {
            order: vel.order(),
            values: u,
        },
        pressure: FieldDg {
            degree: pres.degree(),
            values: sol.p,
        },
        source_imbalance: -defect,
        multiplier: sol.multiplier,
        divergence_load: load,
    })
}

/// Matrix and right-hand side of the concentration equation for one step.
pub fn concentration_system(
    c_n: &FieldP1,
    velocity: &FieldRt,
    t_next: f64,
    config: &RunConfig,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let disc = &*config.discretization;
    let problem = &*config.problem;
    let coeffs = &problem.coefficients;
    let mesh = disc.mesh();
    let p1 = disc.p1();
    let vel = disc.velocity();
    let rule = disc.quadrature();
    let source_rule = &config.source_quadrature;
    let storage = coeffs.porosity / config.tau;

    let locals: Vec<([f64; 9], [f64; 3])> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let verts = mesh.triangle_vertices(t);
            let area = mesh.area(t);
            let tri = mesh.triangles()[t];
            let g = p1.basis_gradients(t);
            let mut a = [0.0; 9];
            let mut rhs = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let m = if i == j { area / 6.0 } else { area / 12.0 };
                    a[i * 3 + j] += storage * m;
                    rhs[i] += storage * m * c_n.values[tri[j]];
                }
            }
            for (l, w) in rule.iter() {
                let x = crate::quadrature::from_barycentric(verts, l);
                let wa = w * area;
                let u = vel.eval(velocity, t, x);
                let d = coeffs.dispersion(u);
                let qp = (coeffs.production)(x, t_next);
                for j in 0..3 {
                    let flux = mat_vec(&d, g[j]);
                    let adv = dot(u, g[j]);
                    for i in 0..3 {
                        a[i * 3 + j] += wa * (dot(flux, g[i]) + adv * l[i] + qp * l[j] * l[i]);
                    }
                }
            }
            for (l, w) in source_rule.iter() {
                let x = crate::quadrature::from_barycentric(verts, l);
                let s = problem.concentration_load(x, t_next);
                for i in 0..3 {
                    rhs[i] += w * area * s * l[i];
                }
            }
            (a, rhs)
        })
        .collect();

    let n = p1.n_dofs();
    let mut b = TripletBuilder::with_capacity(n, n, 9 * mesh.num_triangles());
    let mut rhs = vec![0.0; n];
    for (t, (a, r)) in locals.iter().enumerate() {
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                b.add(tri[i], tri[j], a[i * 3 + j]);
            }
            rhs[tri[i]] += r[i];
        }
    }
    if problem.boundary.conc_flux_n.is_some() {
        for &e in mesh.boundary_edges() {
            let [va, vb] = mesh.edges()[e];
            let normal = mesh.outward_normal(e);
            let (xa, xb) = (mesh.vertices()[va], mesh.vertices()[vb]);
            rhs[va] += integrate_segment(xa, xb, |x, s| problem.boundary.conc_flux(x, normal, t_next) * (1.0 - s));
            rhs[vb] += integrate_segment(xa, xb, |x, s| problem.boundary.conc_flux(x, normal, t_next) * s);
        }
    }
    Ok((b.build()?, rhs))
}

/// Solves for `C^{n+1}` given `U^{n+1}`.
pub fn step_concentration(c_n: &FieldP1, velocity: &FieldRt, t_next: f64, config: &RunConfig) -> Result<FieldP1> {
    let (matrix, rhs) = concentration_system(c_n, velocity, t_next, config)?;
    let values = solve(&LinearSystem::new(&matrix, &rhs).with_settings(config.solver))?;
    check_finite(&values, "concentration")?;
    Ok(FieldP1 { values })
}

/// `max_T |mean_T div U - load_T / |T||`.
pub fn divergence_residual(disc: &Discretization, velocity: &FieldRt, load: &[f64]) -> f64 {
    let mesh = disc.mesh();
    let pres = disc.pressure();
    (0..mesh.num_triangles())
        .map(|t| {
            let div = disc.velocity().divergence_mean(velocity, t);
            (div - load[pres.dof(t, 0)] / mesh.area(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Advances `state` by one step.
pub fn step(state: &DiscreteState, config: &RunConfig) -> Result<(DiscreteState, StepDiagnostics)> {
    let n = state.step + 1;
    let t_next = config.time(n);
    let pv = step_pressure_velocity(&state.concentration, t_next, config)?;
    let c = step_concentration(&state.concentration, &pv.velocity, t_next, config)?;
    let disc = &*config.discretization;
    let diagnostics = StepDiagnostics {
        step: n,
        time: t_next,
        max_concentration: c.max_abs(),
        divergence_residual: divergence_residual(disc, &pv.velocity, &pv.divergence_load),
        pressure_mean: disc.pressure().integral(&pv.pressure),
        source_imbalance: pv.source_imbalance,
    };
    Ok((
        DiscreteState {
            step: n,
            time: t_next,
            concentration: c,
            velocity: Some(pv.velocity),
            pressure: Some(pv.pressure),
        },
        diagnostics,
    ))
}

/// Runs all `N` steps.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_, _| Ok(()))
}

/// Runs all `N` steps, calling `observer` after each one. The first failure
/// aborts the run and is reported with its step index.
pub fn run_with(
    config: &RunConfig,
    mut observer: impl FnMut(&DiscreteState, &StepDiagnostics) -> Result<()>,
) -> Result<RunOutput> {
    let mut state = init_state(config)?;
    let steps = config.num_steps();
    let mut kept = Vec::new();
    for n in 1..=steps {
        let (next, diag) = step(&state, config).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        observer(&next, &diag).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        if n == steps || (config.cadence > 0 && n % config.cadence == 0) {
            kept.push(diag);
        }
        state = next;
    }
    Ok(RunOutput {
        state,
        diagnostics: kept,
    })
}

/// Evaluates a velocity field at `x` on triangle `t`; convenience for
/// callers that only hold the discretization.
pub fn velocity_at(disc: &Discretization, velocity: &FieldRt, t: usize, x: Point) -> Point {
    disc.velocity().eval(velocity, t, x)
}
