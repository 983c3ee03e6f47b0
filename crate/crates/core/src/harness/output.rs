//! CSV and markdown renderings of study results.
//!
//! CSV output omits wall times so that repeated runs are byte-identical.

use std::fmt::Write as _;

use super::rates::{least_squares_rate, pairwise_rates};
use super::study::{CellStatus, ConvergenceRecord, StudyKind, StudyReport};
use crate::timedisc::SplitReport;

/// Scientific notation with four significant digits and a two-digit signed
/// exponent, e.g. `2.024E-01`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000E+00".into();
    }
    let s = format!("{x:.3E}");
    let (mantissa, exp) = s.split_once('E').expect("E in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

fn status_text(status: &CellStatus) -> String {
    match status {
        CellStatus::Ok => "ok".into(),
        CellStatus::Failed(msg) => format!("FAILED: {}", msg.replace([',', '\n'], ";")),
    }
}

pub const CSV_HEADER: &str = "tau,mesh,h,error_u,error_c,error_p,max_concentration,max_divergence_residual,max_pressure_mean,status";

pub fn study_csv(report: &StudyReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        writeln!(
            out,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.tau,
            r.mesh,
            r.h,
            r.error_u,
            r.error_c,
            r.error_p,
            r.max_concentration,
            r.max_divergence_residual,
            r.max_pressure_mean,
            status_text(&r.status)
        )
        .expect("writing to a string");
    }
    out
}

fn tau_label(tau: f64) -> String {
    let inv = 1.0 / tau;
    let k = inv.round();
    if k >= 8.0 && (inv - k).abs() < 1e-9 && (k as u64).is_power_of_two() {
        format!("1/{}", inv.round())
    } else {
        format!("{tau}")
    }
}

/// Groups of record indices sharing a time step, in first-appearance order.
fn tau_groups(records: &[ConvergenceRecord]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == r.tau) {
            Some(g) => g.1.push(i),
            None => groups.push((r.tau, vec![i])),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

fn rate_text(rate: crate::error::Result<f64>) -> String {
    rate.map_or_else(|_| "n/a".into(), |r| format!("{r:.2}"))
}

fn record_row(out: &mut String, r: &ConvergenceRecord) {
    let cells = if r.is_ok() {
        format!(
            "{} | {} | {} | {:.2}",
            format_sci(r.error_u),
            format_sci(r.error_c),
            format_sci(r.error_p),
            r.wall_time_seconds
        )
    } else {
        format!("{} | | | {:.2}", status_text(&r.status), r.wall_time_seconds)
    };
    writeln!(out, "| {} | {} | {} | {} |", tau_label(r.tau), r.mesh, format_sci(r.h), cells).expect("writing to a string");
}

pub fn study_markdown(report: &StudyReport) -> String {
    let mut out = String::new();
    out.push_str("| tau | mesh | h | U error | C error | P error | wall time (s) |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    let records = &report.records;
    let ok = |idx: &[usize]| idx.iter().all(|&i| records[i].is_ok());
    match report.kind {
        StudyKind::CoupledRate => {
            for r in records {
                record_row(&mut out, r);
            }
            let idx: Vec<usize> = (0..records.len()).collect();
            if ok(&idx) {
                let h: Vec<f64> = records.iter().map(|r| r.h).collect();
                let eu: Vec<f64> = records.iter().map(|r| r.error_u).collect();
                let ec: Vec<f64> = records.iter().map(|r| r.error_c).collect();
                let ep: Vec<f64> = records.iter().map(|r| r.error_p).collect();
                writeln!(
                    out,
                    "| rate (least squares) | | | {} | {} | {} | |",
                    rate_text(least_squares_rate(&h, &eu)),
                    rate_text(least_squares_rate(&h, &ec)),
                    rate_text(least_squares_rate(&h, &ep))
                )
                .expect("writing to a string");
            }
        }
        _ => {
            for group in tau_groups(records) {
                for &i in &group {
                    record_row(&mut out, &records[i]);
                }
                if ok(&group) && group.len() > 1 {
                    let pick = |f: fn(&ConvergenceRecord) -> f64| group.iter().map(|&i| f(&records[i])).collect::<Vec<_>>();
                    let fmt_rates = |e: Vec<f64>| {
                        pairwise_rates(&e).map_or_else(
                            |_| "n/a".to_string(),
                            |r| r.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", "),
                        )
                    };
                    writeln!(
                        out,
                        "| pairwise rates | | | {} | {} | {} | |",
                        fmt_rates(pick(|r| r.error_u)),
                        fmt_rates(pick(|r| r.error_c)),
                        fmt_rates(pick(|r| r.error_p))
                    )
                    .expect("writing to a string");
                }
            }
        }
    }
    out
}

pub const SPLIT_CSV_HEADER: &str =
    "tau,mesh,h,total_u,spatial_u,temporal_u,total_c,spatial_c,temporal_c,reference";

pub fn split_csv(report: &SplitReport) -> String {
    let mut out = String::from(SPLIT_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.tau, r.mesh, r.h, r.total_u, r.spatial_u, r.temporal_u, r.total_c, r.spatial_c, r.temporal_c, report.reference
        )
        .expect("writing to a string");
    }
    out
}

pub fn split_markdown(report: &SplitReport) -> String {
    let mut out = format!("Reference: {} with the same time step.\n\n", report.reference);
    out.push_str("| tau | mesh | h | U total | U spatial | U temporal | C total | C spatial | C temporal |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for r in &report.rows {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            tau_label(r.tau),
            r.mesh,
            format_sci(r.h),
            format_sci(r.total_u),
            format_sci(r.spatial_u),
            format_sci(r.temporal_u),
            format_sci(r.total_c),
            format_sci(r.spatial_c),
            format_sci(r.temporal_c)
        )
        .expect("writing to a string");
    }
    if let (Ok(ru), Ok(rc)) = (report.spatial_rate_u(), report.spatial_rate_c()) {
        writeln!(out, "\nSpatial rates (least squares): U {ru:.2}, C {rc:.2}.").expect("writing to a string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_digit_scientific_numbers() {
        assert_eq!(format_sci(0.2024), "2.024E-01");
        assert_eq!(format_sci(7.114e-2), "7.114E-02");
        assert_eq!(format_sci(1234.6), "1.235E+03");
        assert_eq!(format_sci(0.0), "0.000E+00");
        assert_eq!(format_sci(1.0e-12), "1.000E-12");
        assert_eq!(format_sci(f64::NAN), "NaN");
    }

    #[test]
    fn tau_labels() {
        assert_eq!(tau_label(0.125), "1/8");
        assert_eq!(tau_label(1.0 / 128.0), "1/128");
        assert_eq!(tau_label(0.05), "0.05");
        assert_eq!(tau_label(0.25), "0.25");
        assert_eq!(tau_label(0.3), "0.3");
    }
}
