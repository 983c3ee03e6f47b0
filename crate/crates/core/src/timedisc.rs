//! Fine-mesh approximation of the time-discrete solution and the splitting of
//! the total error into a spatial and a temporal part.
//!
//! The fully discrete scheme is the Galerkin discretization of the
//! semi-discrete-in-time system, so running it with the same `tau` on a much
//! finer mesh approximates the time-discrete solution `(P^n, U^n, C^n)`.
//! For a coarse solution `u_h` and exact `u`,
//!
//! ```text
//! total    = ||u_h - u||
//! spatial  = ||u_h - U_ref||
//! temporal = ||U_ref - u||
//! ```
//!
//! All three norms are evaluated with the same quadrature on the reference
//! mesh, so `total <= spatial + temporal` holds up to round-off.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::harness::rates::least_squares_rate;
use crate::harness::study::{case_config, MeshSpec, StudyConfig};
use crate::linalg::SolverSettings;
use crate::manufactured;
use crate::mesh::PointLocator;
use crate::problem::Problem;
use crate::quadrature::TriangleRule;
use crate::scheme::{run_with, DiscreteState, RunConfig};
use crate::spaces::Discretization;

/// All time levels of the scheme on a fine mesh.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub discretization: Arc<Discretization>,
    /// `states[n]` is time level `n`, starting from the initial state.
    pub states: Vec<DiscreteState>,
}

impl ReferenceSolution {
    pub fn final_state(&self) -> &DiscreteState {
        self.states.last().expect("reference has at least the initial state")
    }
}

pub fn solve_time_discrete_reference(
    tau: f64,
    final_time: f64,
    fine: Arc<Discretization>,
    problem: Arc<Problem>,
    solver: SolverSettings,
) -> Result<ReferenceSolution> {
    let config = RunConfig::new(fine.clone(), problem, tau, final_time)?
        .with_solver(solver)
        .with_cadence(0);
    let mut states = vec![crate::scheme::init_state(&config)?];
    run_with(&config, |state, _| {
        states.push(state.clone());
        Ok(())
    })?;
    Ok(ReferenceSolution {
        discretization: fine,
        states,
    })
}

/// Squared-norm accumulators for the three differences of one field.
#[derive(Debug, Clone, Copy, Default)]
struct Triple {
    total: f64,
    spatial: f64,
    temporal: f64,
}

impl Triple {
    fn add(&mut self, w: f64, coarse: Point, reference: Point, exact: Point) {
        let sq = |a: Point, b: Point| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        self.total += w * sq(coarse, exact);
        self.spatial += w * sq(coarse, reference);
        self.temporal += w * sq(reference, exact);
    }

    fn merge(self, other: Triple) -> Triple {
        Triple {
            total: self.total + other.total,
            spatial: self.spatial + other.spatial,
            temporal: self.temporal + other.temporal,
        }
    }

    fn sqrt(self) -> [f64; 3] {
        [self.total.sqrt(), self.spatial.sqrt(), self.temporal.sqrt()]
    }
}

/// `[total, spatial, temporal]` for velocity and concentration of a coarse
/// state against the reference state at the same time level.
pub fn split_errors(
    coarse: &Discretization,
    coarse_state: &DiscreteState,
    fine: &Discretization,
    fine_state: &DiscreteState,
) -> Result<([f64; 3], [f64; 3])> {
    if (coarse_state.time - fine_state.time).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "coarse state at t = {} compared with reference at t = {}",
            coarse_state.time, fine_state.time
        )));
    }
    let (cu, fu) = match (&coarse_state.velocity, &fine_state.velocity) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("split errors need velocities (step >= 1)".into())),
    };
    let t = fine_state.time;
    let rule = TriangleRule::seven_point();
    let locator = PointLocator::new(coarse.mesh());
    let fmesh = fine.mesh();
    let parts: Vec<Result<(Triple, Triple)>> = (0..fmesh.num_triangles())
        .into_par_iter()
        .map(|tf| {
            // Nested meshes put the whole fine triangle inside one coarse one.
            let (tc, _) = locator.locate(fmesh.centroid(tf)).ok_or_else(|| {
                Error::InvalidArgument(format!("fine triangle {tf} lies outside the coarse mesh"))
            })?;
            let mut u = Triple::default();
            let mut c = Triple::default();
            for (x, w) in rule.on_triangle(fmesh.triangle_vertices(tf), fmesh.area(tf)) {
                u.add(
                    w,
                    coarse.velocity().eval(cu, tc, x),
                    fine.velocity().eval(fu, tf, x),
                    manufactured::exact_u(x, t),
                );
                c.add(
                    w,
                    [coarse.p1().eval(&coarse_state.concentration, tc, x), 0.0],
                    [fine.p1().eval(&fine_state.concentration, tf, x), 0.0],
                    [manufactured::exact_c(x, t), 0.0],
                );
            }
            Ok((u, c))
        })
        .collect();
    let mut u = Triple::default();
    let mut c = Triple::default();
    for part in parts {
        let (pu, pc) = part?;
        u = u.merge(pu);
        c = c.merge(pc);
    }
    Ok((u.sqrt(), c.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRow {
    pub tau: f64,
    pub mesh: MeshSpec,
    pub h: f64,
    pub total_u: f64,
    pub spatial_u: f64,
    pub temporal_u: f64,
    pub total_c: f64,
    pub spatial_c: f64,
    pub temporal_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub reference: MeshSpec,
    pub rows: Vec<SplitRow>,
}

fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

impl SplitReport {
    fn column(&self, f: fn(&SplitRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn spatial_rate_u(&self) -> Result<f64> {
        least_squares_rate(&self.column(|r| r.h), &self.column(|r| r.spatial_u))
    }

    pub fn spatial_rate_c(&self) -> Result<f64> {
        least_squares_rate(&self.column(|r| r.h), &self.column(|r| r.spatial_c))
    }

    /// Coefficient of variation (population standard deviation over mean)
    /// of the temporal velocity column.
    pub fn temporal_variation_u(&self) -> f64 {
        coefficient_of_variation(&self.column(|r| r.temporal_u))
    }

    pub fn temporal_variation_c(&self) -> f64 {
        coefficient_of_variation(&self.column(|r| r.temporal_c))
    }

    /// Largest `total - spatial - temporal`, relative to the total.
    pub fn triangle_defect(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| {
                [
                    (r.total_u - r.spatial_u - r.temporal_u) / r.total_u,
                    (r.total_c - r.spatial_c - r.temporal_c) / r.total_c,
                ]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs every cell of `config` and splits its final-time error against a
/// reference computed once per distinct `tau` on `config.reference`.
pub fn error_split_study(config: &StudyConfig) -> Result<SplitReport> {
    let reference = config
        .reference
        .clone()
        .ok_or_else(|| Error::InvalidArgument("splitting study needs a reference mesh".into()))?;
    if config.cells.is_empty() {
        return Err(Error::InvalidArgument("study has no cells".into()));
    }
    let mut taus: Vec<f64> = Vec::new();
    for cell in &config.cells {
        if !taus.contains(&cell.tau) {
            taus.push(cell.tau);
        }
    }
    let mut rows = Vec::with_capacity(config.cells.len());
    for tau in taus {
        let ref_config = case_config(&reference, config.problem, tau, config.final_time, &config.settings)?;
        let fine = solve_time_discrete_reference(
            tau,
            config.final_time,
            ref_config.discretization.clone(),
            ref_config.problem.clone(),
            config.settings.solver,
        )?;
        let cells: Vec<_> = config.cells.iter().filter(|c| c.tau == tau).collect();
        let group: Vec<Result<SplitRow>> = cells
            .par_iter()
            .map(|cell| {
                let cc = case_config(&cell.mesh, config.problem, tau, config.final_time, &config.settings)?;
                let out = crate::scheme::run(&cc)?;
                let (u, c) = split_errors(&cc.discretization, &out.state, &fine.discretization, fine.final_state())?;
                Ok(SplitRow {
                    tau,
                    mesh: cell.mesh.clone(),
                    h: cc.discretization.mesh().h_max(),
                    total_u: u[0],
                    spatial_u: u[1],
                    temporal_u: u[2],
                    total_c: c[0],
                    spatial_c: c[1],
                    temporal_c: c[2],
                })
            })
            .collect();
        for row in group {
            rows.push(row?);
        }
    }
    Ok(SplitReport { reference, rows })
}
