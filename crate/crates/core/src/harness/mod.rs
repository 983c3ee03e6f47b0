//! Error norms, convergence studies, table output and acceptance checks.

pub mod check;
pub mod norms;
pub mod output;
pub mod rates;
pub mod study;

pub use norms::{l2_error_dg, l2_error_p1, l2_error_rt};
pub use output::{format_sci, split_csv, split_markdown, study_csv, study_markdown};
pub use rates::{least_squares_rate, pairwise_rates, rate};
pub use study::{
    run_study, solve_case, CaseResult, CaseSettings, Cell, CellStatus, ConvergenceRecord, MeshSpec, ProblemKind,
    StudyConfig, StudyKind, StudyReport,
};
