//! Single solves with error measurement, and studies over grids of
//! `(tau, mesh)` cells.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::norms::{l2_error_dg, l2_error_p1, l2_error_rt};
use crate::error::{Error, Result};
use crate::linalg::SolverSettings;
use crate::manufactured::{self, ManufacturedProblem};
use crate::mesh::{generate_disk_mesh, generate_unit_square_mesh_with, load_mesh, Diagonal, Mesh};
use crate::quadrature::TriangleRule;
use crate::scheme::{run_with, RunConfig};
use crate::spaces::{Discretization, MixedOrder};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    /// Uniform `M x M` square mesh split along falling diagonals.
    Square(usize),
    /// Uniform `M x M` square mesh split along rising diagonals.
    RisingSquare(usize),
    /// Disk mesh with `M` boundary points.
    Disk(usize),
    File(PathBuf),
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            MeshSpec::Square(m) => generate_unit_square_mesh_with(*m, Diagonal::Falling),
            MeshSpec::RisingSquare(m) => generate_unit_square_mesh_with(*m, Diagonal::Rising),
            MeshSpec::Disk(m) => generate_disk_mesh(*m),
            MeshSpec::File(p) => load_mesh(p),
        }
    }

    pub fn resolution(&self) -> Option<usize> {
        match self {
            MeshSpec::Square(m) | MeshSpec::RisingSquare(m) | MeshSpec::Disk(m) => Some(*m),
            MeshSpec::File(_) => None,
        }
    }

    /// Multiplies the resolution by `factor`, keeping it above the smallest
    /// admissible value. File meshes are left alone.
    pub fn scaled(&self, factor: f64) -> Self {
        let shrink = |m: usize, min: usize| ((m as f64 * factor).round() as usize).max(min);
        match self {
            MeshSpec::Square(m) => MeshSpec::Square(shrink(*m, 2)),
            MeshSpec::RisingSquare(m) => MeshSpec::RisingSquare(shrink(*m, 2)),
            MeshSpec::Disk(m) => MeshSpec::Disk(shrink(*m, 8)),
            MeshSpec::File(p) => MeshSpec::File(p.clone()),
        }
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSpec::Square(m) => write!(f, "square:{m}"),
            MeshSpec::RisingSquare(m) => write!(f, "square-rising:{m}"),
            MeshSpec::Disk(m) => write!(f, "disk:{m}"),
            MeshSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for MeshSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("mesh `{s}` is not of the form kind:arg")))?;
        let count = || {
            arg.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("mesh resolution `{arg}` is not a positive integer")))
        };
        match kind {
            "square" => Ok(MeshSpec::Square(count()?)),
            "square-rising" => Ok(MeshSpec::RisingSquare(count()?)),
            "disk" => Ok(MeshSpec::Disk(count()?)),
            "file" => Ok(MeshSpec::File(PathBuf::from(arg))),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mesh kind `{kind}` (expected square, square-rising, disk or file)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Square with impermeable boundary.
    Ex51,
    /// Disk with inhomogeneous flux data.
    Ex52,
}

impl ProblemKind {
    pub fn manufactured(self) -> ManufacturedProblem {
        match self {
            ProblemKind::Ex51 => ManufacturedProblem::square(),
            ProblemKind::Ex52 => ManufacturedProblem::disk(),
        }
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex51" => Ok(ProblemKind::Ex51),
            "ex52" => Ok(ProblemKind::Ex52),
            _ => Err(Error::InvalidArgument(format!("unknown problem `{s}` (expected ex51 or ex52)"))),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Ex51 => "ex51",
            ProblemKind::Ex52 => "ex52",
        })
    }
}

/// Discretization choices shared by all cells of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSettings {
    pub order: MixedOrder,
    pub solver: SolverSettings,
    /// Degree of the assembly quadrature (errors always use degree 5).
    pub quad_degree: usize,
    /// Report the maximum error over all time levels instead of the final one.
    pub max_over_steps: bool,
}

impl Default for CaseSettings {
    fn default() -> Self {
        Self {
            order: MixedOrder::default(),
            solver: SolverSettings::default(),
            quad_degree: 5,
            max_over_steps: false,
        }
    }
}

/// Outcome of one manufactured solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub tau: f64,
    pub mesh: String,
    pub h: f64,
    pub steps: usize,
    pub error_u: f64,
    pub error_c: f64,
    pub error_p: f64,
    /// Largest nodal `|C|` over all steps.
    pub max_concentration: f64,
    /// Largest per-element divergence defect over all steps.
    pub max_divergence_residual: f64,
    /// Largest `|integral P|` over all steps.
    pub max_pressure_mean: f64,
}

/// Errors of the discrete solution at time `t` against the manufactured
/// solution.
pub fn measure_errors(disc: &Discretization, state: &crate::scheme::DiscreteState) -> [f64; 3] {
    let rule = TriangleRule::seven_point();
    let t = state.time;
    let eu = state
        .velocity
        .as_ref()
        .map_or(f64::NAN, |u| l2_error_rt(u, disc.velocity(), |x| manufactured::exact_u(x, t), &rule));
    let ec = l2_error_p1(&state.concentration, disc.p1(), |x| manufactured::exact_c(x, t), &rule);
    let ep = state
        .pressure
        .as_ref()
        .map_or(f64::NAN, |p| l2_error_dg(p, disc.pressure(), |x| manufactured::exact_p(x, t), &rule));
    [eu, ec, ep]
}

/// Builds the run configuration of a manufactured solve.
pub fn case_config(mesh: &MeshSpec, problem: ProblemKind, tau: f64, final_time: f64, settings: &CaseSettings) -> Result<RunConfig> {
    let mesh = Arc::new(mesh.build()?);
    let rule = TriangleRule::with_degree(settings.quad_degree)?;
    let disc = Arc::new(Discretization::with_quadrature(mesh, settings.order, rule)?);
    Ok(RunConfig::new(disc, Arc::new(problem.manufactured().to_problem()), tau, final_time)?
        .with_solver(settings.solver)
        .with_cadence(0))
}

pub fn solve_case(mesh: &MeshSpec, problem: ProblemKind, tau: f64, final_time: f64, settings: &CaseSettings) -> Result<CaseResult> {
    let config = case_config(mesh, problem, tau, final_time, settings)?;
    let disc = config.discretization.clone();
    let mut worst = [0.0f64; 3];
    let mut last = [f64::NAN; 3];
    let mut max_c = 0.0f64;
    let mut max_div = 0.0f64;
    let mut max_mean = 0.0f64;
    let steps = config.num_steps();
    run_with(&config, |state, diag| {
        max_c = max_c.max(diag.max_concentration);
        max_div = max_div.max(diag.divergence_residual);
        max_mean = max_mean.max(diag.pressure_mean.abs());
        if settings.max_over_steps || state.step == steps {
            last = measure_errors(&disc, state);
            for k in 0..3 {
                worst[k] = worst[k].max(last[k]);
            }
        }
        Ok(())
    })?;
    let errors = if settings.max_over_steps { worst } else { last };
    Ok(CaseResult {
        tau,
        mesh: mesh.to_string(),
        h: disc.mesh().h_max(),
        steps,
        error_u: errors[0],
        error_c: errors[1],
        error_p: errors[2],
        max_concentration: max_c,
        max_divergence_residual: max_div,
        max_pressure_mean: max_mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// `tau` and `h` refined together.
    CoupledRate,
    /// Square meshes refined at several fixed `tau`.
    FixedTau,
    /// Disk meshes refined at several fixed `tau`.
    Disk,
    /// Error splitting against a fine-mesh reference.
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub tau: f64,
    pub mesh: MeshSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub cells: Vec<Cell>,
    pub final_time: f64,
    pub problem: ProblemKind,
    pub settings: CaseSettings,
    /// Reference mesh of a splitting study.
    pub reference: Option<MeshSpec>,
}

pub const TABLE2_TAUS: [f64; 3] = [0.05, 0.1, 0.25];

impl StudyConfig {
    fn grid(kind: StudyKind, problem: ProblemKind, meshes: Vec<MeshSpec>) -> Self {
        let cells = TABLE2_TAUS
            .iter()
            .flat_map(|&tau| meshes.iter().map(move |m| Cell { tau, mesh: m.clone() }))
            .collect();
        Self {
            kind,
            cells,
            final_time: 1.0,
            problem,
            settings: CaseSettings::default(),
            reference: None,
        }
    }

    /// `tau = 8 h^2` with `h = 1/8, 1/16, 1/32`.
    pub fn table1() -> Self {
        Self {
            kind: StudyKind::CoupledRate,
            cells: [(8usize, 1.0 / 8.0), (16, 1.0 / 32.0), (32, 1.0 / 128.0)]
                .iter()
                .map(|&(m, tau)| Cell {
                    tau,
                    mesh: MeshSpec::Square(m),
                })
                .collect(),
            final_time: 1.0,
            problem: ProblemKind::Ex51,
            settings: CaseSettings::default(),
            reference: None,
        }
    }

    pub fn table2() -> Self {
        Self::grid(StudyKind::FixedTau, ProblemKind::Ex51, [8, 16, 32, 64].map(MeshSpec::Square).to_vec())
    }

    pub fn table3() -> Self {
        Self::grid(StudyKind::Disk, ProblemKind::Ex52, [32, 64, 128].map(MeshSpec::Disk).to_vec())
    }

    /// `tau = 0.1`, study meshes `M = 8, 16, 32`, reference `M = 128`.
    pub fn split() -> Self {
        Self {
            kind: StudyKind::Split,
            cells: [8, 16, 32]
                .iter()
                .map(|&m| Cell {
                    tau: 0.1,
                    mesh: MeshSpec::Square(m),
                })
                .collect(),
            final_time: 1.0,
            problem: ProblemKind::Ex51,
            settings: CaseSettings::default(),
            reference: Some(MeshSpec::Square(128)),
        }
    }

    /// Preset by table name: `1`, `2`, `3` or `split`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "1" => Ok(Self::table1()),
            "2" => Ok(Self::table2()),
            "3" => Ok(Self::table3()),
            "split" => Ok(Self::split()),
            _ => Err(Error::InvalidArgument(format!("unknown table `{name}` (expected 1, 2, 3 or split)"))),
        }
    }

    /// Shrinks every mesh resolution by `factor` (time steps unchanged).
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {factor}")));
        }
        for cell in &mut self.cells {
            cell.mesh = cell.mesh.scaled(factor);
        }
        self.reference = self.reference.map(|r| r.scaled(factor));
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub tau: f64,
    pub mesh: MeshSpec,
    pub h: f64,
    pub error_u: f64,
    pub error_c: f64,
    pub error_p: f64,
    pub max_concentration: f64,
    pub max_divergence_residual: f64,
    pub max_pressure_mean: f64,
    pub wall_time_seconds: f64,
    pub status: CellStatus,
}

impl ConvergenceRecord {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub records: Vec<ConvergenceRecord>,
}

impl StudyReport {
    pub fn all_ok(&self) -> bool {
        self.records.iter().all(ConvergenceRecord::is_ok)
    }

    pub fn find(&self, tau: f64, mesh: &MeshSpec) -> Option<&ConvergenceRecord> {
        self.records.iter().find(|r| r.tau == tau && &r.mesh == mesh)
    }
}

fn run_cell(cell: &Cell, config: &StudyConfig) -> ConvergenceRecord {
    let start = Instant::now();
    let result = solve_case(&cell.mesh, config.problem, cell.tau, config.final_time, &config.settings);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok(r) => ConvergenceRecord {
            tau: cell.tau,
            mesh: cell.mesh.clone(),
            h: r.h,
            error_u: r.error_u,
            error_c: r.error_c,
            error_p: r.error_p,
            max_concentration: r.max_concentration,
            max_divergence_residual: r.max_divergence_residual,
            max_pressure_mean: r.max_pressure_mean,
            wall_time_seconds: wall,
            status: CellStatus::Ok,
        },
        Err(e) => ConvergenceRecord {
            tau: cell.tau,
            mesh: cell.mesh.clone(),
            h: f64::NAN,
            error_u: f64::NAN,
            error_c: f64::NAN,
            error_p: f64::NAN,
            max_concentration: f64::NAN,
            max_divergence_residual: f64::NAN,
            max_pressure_mean: f64::NAN,
            wall_time_seconds: wall,
            status: CellStatus::Failed(e.to_string()),
        },
    }
}

/// Runs every cell (in parallel) and returns the records in cell order. A
/// failing cell is recorded with its error and does not stop the study.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    if config.cells.is_empty() {
        return Err(Error::InvalidArgument("study has no cells".into()));
    }
    let records = config.cells.par_iter().map(|cell| run_cell(cell, config)).collect();
    Ok(StudyReport {
        kind: config.kind,
        records,
    })
}
