use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixfem::harness::check::{self, CheckOutcome};
use mixfem::harness::{
    format_sci, run_study, solve_case, split_csv, split_markdown, study_csv, study_markdown, CaseSettings, MeshSpec,
    ProblemKind, StudyConfig, StudyKind,
};
use mixfem::linalg::{SolverKind, SolverSettings};
use mixfem::spaces::MixedOrder;
use mixfem::timedisc::error_split_study;

/// Environment variable that sets the worker thread count.
const THREADS_VAR: &str = "MIXFEM_THREADS";

#[derive(Parser)]
#[command(name = "mixfem", version, about = "Mixed finite element solver for miscible displacement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Discretization {
    /// Raviart-Thomas index of the velocity space: 0 or 1.
    #[arg(long, default_value = "1")]
    order: MixedOrder,
    /// Linear solver for the concentration system.
    #[arg(long, default_value = "direct")]
    solver: SolverKind,
    /// Degree of the assembly quadrature: 1, 2 or 5.
    #[arg(long = "quad-degree", default_value_t = 5)]
    quad_degree: usize,
    /// Report the maximum error over all time levels.
    #[arg(long = "max-over-steps")]
    max_over_steps: bool,
}

impl Discretization {
    fn settings(&self) -> CaseSettings {
        CaseSettings {
            order: self.order,
            solver: SolverSettings {
                kind: self.solver,
                ..SolverSettings::default()
            },
            quad_degree: self.quad_degree,
            max_over_steps: self.max_over_steps,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one manufactured problem and report its errors.
    Solve {
        /// square:M, disk:M or file:PATH.
        #[arg(long)]
        mesh: MeshSpec,
        #[arg(long)]
        tau: f64,
        /// Final time.
        #[arg(long = "T", default_value_t = 1.0)]
        final_time: f64,
        /// ex51 (square) or ex52 (disk).
        #[arg(long, default_value = "ex51")]
        problem: ProblemKind,
        /// Write the result as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        disc: Discretization,
    },
    /// Regenerate one of the convergence tables.
    Study {
        /// 1, 2, 3 or split.
        #[arg(long)]
        table: String,
        /// Multiply all mesh resolutions by this factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Directory for the CSV and markdown files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare against the published tables and fail on violations.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        disc: Discretization,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| format!("{THREADS_VAR}={value} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn report_checks(outcomes: &[CheckOutcome]) -> bool {
    for o in outcomes {
        println!("{o}");
    }
    outcomes.iter().all(|o| o.passed)
}

fn solve(
    mesh: MeshSpec,
    tau: f64,
    final_time: f64,
    problem: ProblemKind,
    out: Option<PathBuf>,
    settings: CaseSettings,
) -> Result<bool, String> {
    let r = solve_case(&mesh, problem, tau, final_time, &settings).map_err(|e| e.to_string())?;
    println!("problem {problem}, mesh {}, h {}, tau {tau}, {} steps", r.mesh, format_sci(r.h), r.steps);
    let which = if settings.max_over_steps { "max over steps" } else { "final time" };
    println!("L2 errors ({which}): U {}  C {}  P {}", format_sci(r.error_u), format_sci(r.error_c), format_sci(r.error_p));
    println!(
        "max |C| {}, max divergence defect {}, max |mean P| {}",
        format_sci(r.max_concentration),
        format_sci(r.max_divergence_residual),
        format_sci(r.max_pressure_mean)
    );
    if let Some(path) = out {
        let csv = format!(
            "problem,tau,mesh,h,steps,error_u,error_c,error_p,max_concentration,max_divergence_residual\n{problem},{:e},{},{:e},{},{:e},{:e},{:e},{:e},{:e}\n",
            r.tau, r.mesh, r.h, r.steps, r.error_u, r.error_c, r.error_p, r.max_concentration, r.max_divergence_residual
        );
        write_file(&path, &csv)?;
    }
    Ok(true)
}

fn study(table: &str, scale: f64, out: Option<PathBuf>, check: bool, settings: CaseSettings) -> Result<bool, String> {
    let mut config = StudyConfig::preset(table).map_err(|e| e.to_string())?;
    config.settings = settings;
    let config = config.scaled(scale).map_err(|e| e.to_string())?;
    let stem = if table == "split" { "split".to_string() } else { format!("table{table}") };
    if let Some(dir) = &out {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }

    if config.kind == StudyKind::Split {
        let report = error_split_study(&config).map_err(|e| e.to_string())?;
        let md = split_markdown(&report);
        print!("{md}");
        if let Some(dir) = &out {
            write_file(&dir.join(format!("{stem}.csv")), &split_csv(&report))?;
            write_file(&dir.join(format!("{stem}.md")), &md)?;
        }
        return Ok(!check || report_checks(&check::check_split(&report)));
    }

    let report = run_study(&config).map_err(|e| e.to_string())?;
    let md = study_markdown(&report);
    print!("{md}");
    if let Some(dir) = &out {
        write_file(&dir.join(format!("{stem}.csv")), &study_csv(&report))?;
        write_file(&dir.join(format!("{stem}.md")), &md)?;
    }
    let mut ok = report.all_ok();
    if !ok {
        eprintln!("some cells failed");
    }
    if check {
        let outcomes = match config.kind {
            StudyKind::CoupledRate => {
                let mut v = vec![check::check_health("table 1 health", &report)];
                v.extend(check::check_table1(&report));
                v
            }
            StudyKind::FixedTau => check::check_table2(&report),
            StudyKind::Disk => check::check_table3(&report),
            StudyKind::Split => unreachable!("handled above"),
        };
        ok &= report_checks(&outcomes);
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Solve {
            mesh,
            tau,
            final_time,
            problem,
            out,
            disc,
        } => solve(mesh, tau, final_time, problem, out, disc.settings()),
        Command::Study {
            table,
            scale,
            out,
            check,
            disc,
        } => study(&table, scale, out, check, disc.settings()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
