//! Table emission for study results.
//!
//! CSV output prints floats with Rust's shortest round-trip formatting, so
//! a parse of the emitted table recovers the exact values; the timing
//! columns are the only non-deterministic ones.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::study::{EigenReport, LevelReport, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidInput(format!("unknown format '{other}'"))),
        }
    }
}

pub const RUN_CSV_HEADER: &str = "level,nc,h,dt,err_fg,rate_fg,err_tt,rate_tt,time_fg_s,time_tt_s,time_ratio,strg_fg,strg_tt,strg_ratio,max_rank";

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ratios(row: &LevelReport) -> (Option<f64>, Option<f64>) {
    let time_ratio = match (row.time_fg_s, row.time_tt_s) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    let strg_ratio = match (row.strg_fg, row.strg_tt) {
        (Some(a), Some(b)) if b > 0 => Some(a as f64 / b as f64),
        _ => None,
    };
    (time_ratio, strg_ratio)
}

pub fn render_run_csv(report: &RunReport) -> String {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        let (time_ratio, strg_ratio) = ratios(row);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.level,
            row.nc,
            row.h,
            row.dt,
            opt_f64(row.err_fg),
            opt_f64(row.rate_fg),
            opt_f64(row.err_tt),
            opt_f64(row.rate_tt),
            opt_f64(row.time_fg_s),
            opt_f64(row.time_tt_s),
            opt_f64(time_ratio),
            opt_usize(row.strg_fg),
            opt_usize(row.strg_tt),
            opt_f64(strg_ratio),
            opt_usize(row.max_rank),
        ));
    }
    out
}

fn md_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

fn md_rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

pub fn render_run_markdown(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str("| level | nc | h | dt | err_fg | rate_fg | err_tt | rate_tt | time_fg_s | time_tt_s | time_r | strg_fg | strg_tt | strg_r | max_rank |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for row in &report.rows {
        let (time_ratio, strg_ratio) = ratios(row);
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            row.level,
            row.nc,
            md_f64(Some(row.h)),
            md_f64(Some(row.dt)),
            md_f64(row.err_fg),
            md_rate(row.rate_fg),
            md_f64(row.err_tt),
            md_rate(row.rate_tt),
            md_f64(row.time_fg_s),
            md_f64(row.time_tt_s),
            md_rate(time_ratio),
            opt_usize(row.strg_fg),
            opt_usize(row.strg_tt),
            md_rate(strg_ratio),
            row.max_rank.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    out
}

pub fn render_run_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_run_csv(report),
        ReportFormat::Markdown => render_run_markdown(report),
    }
}

pub const EIGEN_CSV_HEADER: &str = "nc,dt,lambda_a,lambda_pa";

pub fn render_eigen_report(report: &EigenReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(EIGEN_CSV_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.nc, row.dt, row.lambda_a, row.lambda_pa
                ));
            }
            out
        }
        ReportFormat::Markdown => {
            let mut out = String::from("| nc | dt | lambda_a | lambda_pa |\n|---|---|---|---|\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "| {} | {} | {:.4e} | {:.4} |\n",
                    row.nc, row.dt, row.lambda_a, row.lambda_pa
                ));
            }
            out
        }
    }
}

/// Writes a rendered table to `path`, or to stdout when absent.
pub fn emit_report(report: &RunReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    emit_text(&render_run_report(report, format), path)
}

pub fn emit_eigen_report(
    report: &EigenReport,
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<()> {
    emit_text(&render_eigen_report(report, format), path)
}

fn emit_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses a run-report CSV body back into rows; the test suite uses this to
/// confirm the emission round-trips exactly.
pub fn parse_run_csv(text: &str) -> Result<RunReport> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty csv".into()))?;
    if header != RUN_CSV_HEADER {
        return Err(Error::InvalidInput(format!("unexpected header '{header}'")));
    }
    let mut report = RunReport::default();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 15 {
            return Err(Error::InvalidInput(format!(
                "expected 15 columns, got {}",
                cols.len()
            )));
        }
        let f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|_| {
                    Error::InvalidInput(format!("bad float '{s}'"))
                })?))
            }
        };
        let u = |s: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|_| {
                    Error::InvalidInput(format!("bad integer '{s}'"))
                })?))
            }
        };
        report.rows.push(LevelReport {
            level: cols[0]
                .parse()
                .map_err(|_| Error::InvalidInput("bad level".into()))?,
            nc: cols[1]
                .parse()
                .map_err(|_| Error::InvalidInput("bad nc".into()))?,
            h: f(cols[2])?.unwrap_or(0.0),
            dt: f(cols[3])?.unwrap_or(0.0),
            err_fg: f(cols[4])?,
            rate_fg: f(cols[5])?,
            err_tt: f(cols[6])?,
            rate_tt: f(cols[7])?,
            time_fg_s: f(cols[8])?,
            time_tt_s: f(cols[9])?,
            strg_fg: u(cols[11])?,
            strg_tt: u(cols[12])?,
            max_rank: u(cols[14])?,
            ..Default::default()
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> RunReport {
        RunReport {
            rows: vec![
                LevelReport {
                    level: 0,
                    nc: 20,
                    h: 0.05,
                    dt: 1e-4,
                    err_fg: Some(1.234567890123e-3),
                    err_tt: Some(1.234567890124e-3),
                    time_fg_s: Some(0.5),
                    time_tt_s: Some(0.01),
                    strg_fg: Some(15625),
                    strg_tt: Some(75),
                    max_rank: Some(3),
                    ..Default::default()
                },
                LevelReport {
                    level: 1,
                    nc: 40,
                    h: 0.025,
                    dt: 2.5e-5,
                    err_fg: Some(3.1e-4),
                    rate_fg: Some(1.993_f64),
                    err_tt: Some(3.2e-4),
                    rate_tt: Some(1.95),
                    strg_fg: Some(91125),
                    strg_tt: Some(135),
                    max_rank: Some(1),
                    ..Default::default()
                },
            ],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = render_run_csv(&RunReport::default());
        assert_eq!(csv.trim_end(), RUN_CSV_HEADER);
    }

    #[test]
    fn one_level_report_is_two_lines() {
        let mut r = sample_report();
        r.rows.truncate(1);
        let csv = render_run_csv(&r);
        assert_eq!(csv.trim_end().lines().count(), 2);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let r = sample_report();
        let csv = render_run_csv(&r);
        let back = parse_run_csv(&csv).unwrap();
        assert_eq!(back.rows.len(), r.rows.len());
        for (a, b) in r.rows.iter().zip(back.rows.iter()) {
            assert_eq!(a.level, b.level);
            assert_eq!(a.nc, b.nc);
            assert_eq!(a.h, b.h);
            assert_eq!(a.dt, b.dt);
            assert_eq!(a.err_fg, b.err_fg);
            assert_eq!(a.err_tt, b.err_tt);
            assert_eq!(a.rate_fg, b.rate_fg);
            assert_eq!(a.rate_tt, b.rate_tt);
            assert_eq!(a.strg_fg, b.strg_fg);
            assert_eq!(a.strg_tt, b.strg_tt);
            assert_eq!(a.max_rank, b.max_rank);
        }
    }

    #[test]
    fn markdown_has_one_row_per_level() {
        let md = render_run_markdown(&sample_report());
        assert_eq!(md.lines().count(), 2 + 2);
        assert!(md.starts_with("| level |"));
    }
}
