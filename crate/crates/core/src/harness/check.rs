//! Pass/fail checks of study results against the published tables.

use super::rates::least_squares_rate;
use super::study::{ConvergenceRecord, MeshSpec, StudyReport};
use crate::timedisc::SplitReport;

/// Largest admissible nodal `|C|` in any run.
pub const CONCENTRATION_BOUND: f64 = 10.0;

/// Published `(tau, M, U error, C error)` values.
pub const TABLE1: [(f64, usize, f64, f64); 3] = [
    (1.0 / 8.0, 8, 2.024e-1, 7.114e-2),
    (1.0 / 32.0, 16, 5.264e-2, 1.713e-2),
    (1.0 / 128.0, 32, 1.333e-2, 4.070e-3),
];

pub const TABLE2: [(f64, usize, f64, f64); 12] = [
    (0.05, 8, 1.955e-1, 4.748e-2),
    (0.05, 16, 5.531e-2, 2.081e-2),
    (0.05, 32, 2.409e-2, 1.077e-2),
    (0.05, 64, 1.998e-2, 8.243e-3),
    (0.1, 8, 1.998e-1, 6.216e-2),
    (0.1, 16, 6.577e-2, 3.348e-2),
    (0.1, 32, 4.168e-2, 2.240e-2),
    (0.1, 64, 3.910e-2, 1.961e-2),
    (0.25, 8, 2.195e-1, 1.336e-1),
    (0.25, 16, 1.088e-1, 9.885e-2),
    (0.25, 32, 9.491e-2, 8.426e-2),
    (0.25, 64, 9.349e-2, 8.062e-2),
];

pub const TABLE3: [(f64, usize, f64, f64); 9] = [
    (0.05, 32, 7.105e-2, 1.445e-2),
    (0.05, 64, 2.526e-2, 4.022e-3),
    (0.05, 128, 1.523e-2, 7.754e-4),
    (0.1, 32, 7.560e-2, 1.569e-2),
    (0.1, 64, 3.523e-2, 4.340e-3),
    (0.1, 128, 2.869e-2, 1.248e-3),
    (0.25, 32, 9.719e-2, 2.900e-2),
    (0.25, 64, 6.960e-2, 1.429e-2),
    (0.25, 128, 6.632e-2, 7.940e-3),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn missing(name: &str, what: &str) -> Self {
        Self::new(name, false, format!("{what} missing or failed"))
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark} {}: {}", self.name, self.detail)
    }
}

fn ok_record(report: &StudyReport, tau: f64, mesh: MeshSpec) -> Option<&ConvergenceRecord> {
    report.find(tau, &mesh).filter(|r| r.is_ok())
}

/// `max(a/b, b/a) <= factor`.
fn within_factor(a: f64, b: f64, factor: f64) -> bool {
    a > 0.0 && b > 0.0 && (a / b).max(b / a) <= factor
}

/// Every cell finished, produced finite errors and kept `|C| <= 10`.
pub fn check_health(name: &str, report: &StudyReport) -> CheckOutcome {
    let bad: Vec<String> = report
        .records
        .iter()
        .filter(|r| {
            !r.is_ok()
                || !(r.error_u.is_finite() && r.error_c.is_finite())
                || !(r.max_concentration <= CONCENTRATION_BOUND)
        })
        .map(|r| format!("tau={} {}", r.tau, r.mesh))
        .collect();
    CheckOutcome::new(
        name,
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} cells finite, max|C| <= {CONCENTRATION_BOUND}", report.records.len())
        } else {
            format!("unhealthy cells: {}", bad.join(", "))
        },
    )
}

/// Rates in `[1.7, 2.3]` (U) and `[1.7, 2.4]` (C), and errors within a factor
/// of two of the published ones.
pub fn check_table1(report: &StudyReport) -> Vec<CheckOutcome> {
    let recs: Option<Vec<&ConvergenceRecord>> = TABLE1
        .iter()
        .map(|&(tau, m, _, _)| ok_record(report, tau, MeshSpec::Square(m)))
        .collect();
    let Some(recs) = recs else {
        return vec![CheckOutcome::missing("table 1", "a table 1 cell")];
    };
    let h: Vec<f64> = recs.iter().map(|r| r.h).collect();
    let eu: Vec<f64> = recs.iter().map(|r| r.error_u).collect();
    let ec: Vec<f64> = recs.iter().map(|r| r.error_c).collect();
    let mut out = Vec::new();
    match least_squares_rate(&h, &eu) {
        Ok(r) => out.push(CheckOutcome::new("table 1 U rate", (1.7..=2.3).contains(&r), format!("{r:.3} in [1.7, 2.3]"))),
        Err(e) => out.push(CheckOutcome::new("table 1 U rate", false, e.to_string())),
    }
    match least_squares_rate(&h, &ec) {
        Ok(r) => out.push(CheckOutcome::new("table 1 C rate", (1.7..=2.4).contains(&r), format!("{r:.3} in [1.7, 2.4]"))),
        Err(e) => out.push(CheckOutcome::new("table 1 C rate", false, e.to_string())),
    }
    let mut detail = Vec::new();
    let mut ok = true;
    for (r, &(_, m, pu, pc)) in recs.iter().zip(TABLE1.iter()) {
        let good = within_factor(r.error_u, pu, 2.0) && within_factor(r.error_c, pc, 2.0);
        ok &= good;
        detail.push(format!("M={m}: U {:.3e}/{pu:.3e}, C {:.3e}/{pc:.3e}", r.error_u, r.error_c));
    }
    out.push(CheckOutcome::new("table 1 errors within factor 2", ok, detail.join("; ")));
    out
}

/// Plateau at `tau = 0.25` (M=64 within 25% of M=32) and monotone decrease
/// then flattening at `tau = 0.05`.
pub fn check_table2(report: &StudyReport) -> Vec<CheckOutcome> {
    let mut out = vec![check_health("table 2 health", report)];
    match (ok_record(report, 0.25, MeshSpec::Square(32)), ok_record(report, 0.25, MeshSpec::Square(64))) {
        (Some(a), Some(b)) => {
            let du = (b.error_u / a.error_u - 1.0).abs();
            let dc = (b.error_c / a.error_c - 1.0).abs();
            out.push(CheckOutcome::new(
                "table 2 plateau at tau=0.25",
                du <= 0.25 && dc <= 0.25,
                format!("M=64 vs M=32: U {:+.1}%, C {:+.1}%", 100.0 * (b.error_u / a.error_u - 1.0), 100.0 * (b.error_c / a.error_c - 1.0)),
            ));
        }
        _ => out.push(CheckOutcome::missing("table 2 plateau at tau=0.25", "tau=0.25 M=32/64")),
    }
    let recs: Option<Vec<&ConvergenceRecord>> =
        [8, 16, 32, 64].iter().map(|&m| ok_record(report, 0.05, MeshSpec::Square(m))).collect();
    match recs {
        Some(recs) => {
            let mut pass = true;
            let mut detail = Vec::new();
            for (name, e) in [
                ("U", recs.iter().map(|r| r.error_u).collect::<Vec<_>>()),
                ("C", recs.iter().map(|r| r.error_c).collect::<Vec<_>>()),
            ] {
                let monotone = e.windows(2).all(|w| w[1] < w[0]);
                let first = e[0] / e[1];
                let last = e[2] / e[3];
                pass &= monotone && last < first;
                detail.push(format!("{name}: reduction {first:.2} then {last:.2}, monotone {monotone}"));
            }
            out.push(CheckOutcome::new("table 2 decrease then flatten at tau=0.05", pass, detail.join("; ")));
        }
        None => out.push(CheckOutcome::missing("table 2 decrease then flatten at tau=0.05", "tau=0.05 cells")),
    }
    out
}

/// `C` errors at `tau = 0.05` fall by at least 3 per doubling and lie within
/// a factor of three of the published values.
pub fn check_table3(report: &StudyReport) -> Vec<CheckOutcome> {
    let mut out = vec![check_health("table 3 health", report)];
    let recs: Option<Vec<&ConvergenceRecord>> =
        [32, 64, 128].iter().map(|&m| ok_record(report, 0.05, MeshSpec::Disk(m))).collect();
    let Some(recs) = recs else {
        out.push(CheckOutcome::missing("table 3 C reduction", "tau=0.05 disk cells"));
        return out;
    };
    let e: Vec<f64> = recs.iter().map(|r| r.error_c).collect();
    let factors = [e[0] / e[1], e[1] / e[2]];
    out.push(CheckOutcome::new(
        "table 3 C reduction >= 3 per doubling",
        factors.iter().all(|&f| f >= 3.0),
        format!("factors {:.2}, {:.2}", factors[0], factors[1]),
    ));
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, &(_, m, _, pc)) in recs.iter().zip(TABLE3.iter()) {
        ok &= within_factor(r.error_c, pc, 3.0);
        detail.push(format!("M={m}: {:.3e}/{pc:.3e}", r.error_c));
    }
    out.push(CheckOutcome::new("table 3 C errors within factor 3", ok, detail.join("; ")));
    out
}

/// Spatial velocity rate in `[1.6, 2.4]` and temporal coefficient of
/// variation below 10%.
pub fn check_split(report: &SplitReport) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    match report.spatial_rate_u() {
        Ok(r) => out.push(CheckOutcome::new("split spatial U rate", (1.6..=2.4).contains(&r), format!("{r:.3} in [1.6, 2.4]"))),
        Err(e) => out.push(CheckOutcome::new("split spatial U rate", false, e.to_string())),
    }
    let cv = report.temporal_variation_u();
    out.push(CheckOutcome::new("split temporal U variation", cv < 0.1, format!("coefficient of variation {cv:.2e} < 0.1")));
    let defect = report.triangle_defect();
    out.push(CheckOutcome::new(
        "split triangle inequality",
        defect <= 1e-12,
        format!("max (total - spatial - temporal)/total = {defect:.2e}"),
    ));
    out
}
