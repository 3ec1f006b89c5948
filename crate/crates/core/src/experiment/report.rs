use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Controller, TrialResult};

/// Floors for the percentage denominator, per column (cm, cm, rad, s).
pub const PCT_FLOOR: [f64; 4] = [0.1, 0.1, 0.01, 0.1];

#[derive(Debug, Error, PartialEq)]
pub enum SummaryError {
    #[error("cannot pair {auto} auto trials with {manual} manual trials")]
    LengthMismatch { auto: usize, manual: usize },
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("nothing to write")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

/// Percent improvement of auto over manual per column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub x_pct: f64,
    pub y_pct: f64,
    pub f_pct: f64,
    pub t_pct: f64,
}

impl ComparisonRow {
    fn from_array(a: [f64; 4]) -> Self {
        Self { x_pct: a[0], y_pct: a[1], f_pct: a[2], t_pct: a[3] }
    }

    fn to_array(self) -> [f64; 4] {
        [self.x_pct, self.y_pct, self.f_pct, self.t_pct]
    }
}

fn improvement(manual: f64, auto: f64, floor: f64) -> f64 {
    100.0 * (manual.abs() - auto.abs()) / manual.abs().max(floor)
}

/// Pairs trial `i` of each list.
pub fn summarize(auto: &[TrialResult], manual: &[TrialResult]) -> Result<Vec<ComparisonRow>, SummaryError> {
    if auto.len() != manual.len() {
        return Err(SummaryError::LengthMismatch { auto: auto.len(), manual: manual.len() });
    }
    Ok(auto
        .iter()
        .zip(manual)
        .map(|(a, m)| {
            let (av, mv) = ([a.x_err, a.y_err, a.f_err, a.t], [m.x_err, m.y_err, m.f_err, m.t]);
            ComparisonRow::from_array(std::array::from_fn(|k| improvement(mv[k], av[k], PCT_FLOOR[k])))
        })
        .collect())
}

/// Column means, the "Results" row.
pub fn aggregate(rows: &[ComparisonRow]) -> ComparisonRow {
    let n = rows.len().max(1) as f64;
    let mut sum = [0.0; 4];
    for r in rows {
        for (s, v) in sum.iter_mut().zip(r.to_array()) {
            *s += v;
        }
    }
    ComparisonRow::from_array(sum.map(|s| s / n))
}

/// Fixed-point formatting that never prints a negative zero.
fn fixed(v: f64, dp: usize) -> String {
    let s = format!("{v:.dp$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_owned()
    } else {
        s
    }
}

fn write_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Per-trial table. The heading column is left out when `with_heading` is false.
pub fn format_trials_csv(results: &[TrialResult], with_heading: bool) -> String {
    let mut header = vec!["trial", "x_cm", "y_cm"];
    if with_heading {
        header.push("f_rad");
    }
    header.extend(["t_s", "status", "path_m"]);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![r.index.to_string(), fixed(r.x_err, 1), fixed(r.y_err, 1)];
            if with_heading {
                row.push(fixed(r.f_err, 2));
            }
            row.extend([fixed(r.t, 1), r.status.name().to_owned(), fixed(r.path_length, 2)]);
            row
        })
        .collect();
    write_csv(&header, &rows)
}

fn pct_row(label: String, r: &ComparisonRow, with_heading: bool) -> Vec<String> {
    let mut row = vec![label, fixed(r.x_pct, 0), fixed(r.y_pct, 0)];
    if with_heading {
        row.push(fixed(r.f_pct, 0));
    }
    row.push(fixed(r.t_pct, 0));
    row
}

/// Per-pair percentages followed by the "Results" row of means.
pub fn format_comparison_csv(rows: &[ComparisonRow], with_heading: bool) -> String {
    let mut header = vec!["trial", "x_pct", "y_pct"];
    if with_heading {
        header.push("f_pct");
    }
    header.push("t_pct");
    let mut out: Vec<Vec<String>> =
        rows.iter().enumerate().map(|(i, r)| pct_row((i + 1).to_string(), r, with_heading)).collect();
    out.push(pct_row("Results".to_owned(), &aggregate(rows), with_heading));
    write_csv(&header, &out)
}

/// Heading error is only meaningful in the open-space run.
pub fn reports_heading(scenario: &str) -> bool {
    scenario == "open_space"
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, EmitError> {
    std::fs::write(&path, text).map_err(|source| EmitError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `{scenario}_{controller}.csv` for each result set and, when both
/// are present, `{scenario}_comparison.csv`. Returns the files written and a
/// console rendering of the same tables.
pub fn emit(
    out_dir: &Path,
    scenario: &str,
    auto: Option<&[TrialResult]>,
    manual: Option<&[TrialResult]>,
) -> Result<(Vec<PathBuf>, String), EmitError> {
    if auto.is_none_or(|a| a.is_empty()) && manual.is_none_or(|m| m.is_empty()) {
        return Err(EmitError::Empty);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| EmitError::Io { path: out_dir.to_owned(), source })?;
    let heading = reports_heading(scenario);
    let mut files = Vec::new();
    let mut console = String::new();
    for (controller, results) in [(Controller::Auto, auto), (Controller::Manual, manual)] {
        let Some(results) = results.filter(|r| !r.is_empty()) else { continue };
        let text = format_trials_csv(results, heading);
        files.push(write_file(out_dir.join(format!("{scenario}_{}.csv", controller.name())), &text)?);
        let _ = writeln!(console, "== {scenario} / {} ==", controller.name());
        console.push_str(&table(&text));
    }
    if let (Some(a), Some(m)) = (auto, manual) {
        if !a.is_empty() && !m.is_empty() {
            let text = format_comparison_csv(&summarize(a, m)?, heading);
            files.push(write_file(out_dir.join(format!("{scenario}_comparison.csv")), &text)?);
            let _ = writeln!(console, "== {scenario} / improvement, % ==");
            console.push_str(&table(&text));
        }
    }
    Ok((files, console))
}

/// Right-aligned text table from CSV text.
fn table(csv_text: &str) -> String {
    let rows: Vec<Vec<&str>> = csv_text.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
        out.push_str(&cells.join("  "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::TrialStatus;
    use approx::assert_relative_eq;

    fn trial(index: usize, x: f64, y: f64, f: f64, t: f64) -> TrialResult {
        TrialResult {
            index,
            x_err: x,
            y_err: y,
            f_err: f,
            t,
            collided: false,
            status: TrialStatus::Arrived,
            path_length: 2.0,
            unsafe_commands: 0,
        }
    }

    #[test]
    fn halving_the_error_is_fifty_percent() {
        let rows = summarize(&[trial(1, 5.0, 0.0, 0.0, 1.0)], &[trial(1, 10.0, 0.0, 0.0, 1.0)]).unwrap();
        assert_relative_eq!(rows[0].x_pct, 50.0);
    }

    #[test]
    fn identical_lists_give_zero() {
        let t = vec![trial(1, -3.0, 2.0, 0.1, 8.0), trial(2, 0.0, 0.0, 0.0, 9.0)];
        for r in summarize(&t, &t).unwrap() {
            assert_eq!(r.to_array(), [0.0; 4]);
        }
    }

    #[test]
    fn zero_manual_error_stays_finite() {
        let rows = summarize(&[trial(1, 1.0, 0.0, 0.0, 1.0)], &[trial(1, 0.0, 0.0, 0.0, 1.0)]).unwrap();
        assert_relative_eq!(rows[0].x_pct, -1000.0);
        assert!(rows[0].to_array().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = summarize(&[trial(1, 0.0, 0.0, 0.0, 1.0)], &[]).unwrap_err();
        assert_eq!(err, SummaryError::LengthMismatch { auto: 1, manual: 0 });
    }

    // Open-space improvement table as published: per-row values and their
    // "Results" row.
    const PUBLISHED_OPEN_SPACE_PCT: [[f64; 4]; 10] = [
        [57.0, -32.0, 18.0, 16.0],
        [53.0, 85.0, 206.0, 3.0],
        [192.0, 23.0, 28.0, 20.0],
        [6.0, 106.0, -34.0, 12.0],
        [63.0, 36.0, -34.0, 8.0],
        [88.0, 30.0, -43.0, 6.0],
        [-110.0, 23.0, -6.0, 13.0],
        [19.0, -28.0, 31.0, -4.0],
        [-47.0, -91.0, 166.0, 3.0],
        [168.0, 14.0, -18.0, -4.0],
    ];

    #[test]
    fn results_row_is_the_column_mean_of_published_rows() {
        let rows: Vec<ComparisonRow> = PUBLISHED_OPEN_SPACE_PCT.iter().map(|r| ComparisonRow::from_array(*r)).collect();
        let csv = format_comparison_csv(&rows, true);
        assert_eq!(csv.lines().last().unwrap(), "Results,49,17,31,7");
    }

    #[test]
    fn published_trials_under_our_formula() {
        // Operator and algorithm open-space trials as published (x, y, f, t).
        let manual = [
            (-6.8, -9.2, -0.44, 10.1),
            (5.2, 12.3, -0.73, 9.2),
            (15.6, 13.9, -0.44, 9.5),
            (3.8, 11.3, -0.16, 9.2),
            (-7.9, -7.5, 0.27, 7.5),
            (-6.2, -6.1, -0.08, 9.4),
            (-1.8, 3.8, 0.16, 9.1),
            (-3.1, -11.0, 0.11, 8.9),
            (6.7, 2.1, -0.59, 8.4),
            (-12.0, 3.8, -0.17, 8.2),
        ];
        let auto = [
            (2.8, 11.8, -0.38, 8.7),
            (1.5, 5.4, -0.06, 8.9),
            (-2.4, -12.0, -0.35, 7.7),
            (-3.8, -2.7, -0.27, 8.1),
            (-3.5, 4.6, -0.38, 6.8),
            (0.1, 3.7, -0.22, 8.9),
            (9.5, 1.9, -0.18, 7.9),
            (-1.8, -13.3, 0.11, 9.3),
            (-10.0, -9.5, 0.05, 8.1),
            (0.3, 2.7, 0.23, 8.6),
        ];
        let to_trials = |v: &[(f64, f64, f64, f64)]| -> Vec<TrialResult> {
            v.iter().enumerate().map(|(i, &(x, y, f, t))| trial(i + 1, x, y, f, t)).collect()
        };
        let rows = summarize(&to_trials(&auto), &to_trials(&manual)).unwrap();
        let mean = aggregate(&rows);
        // Computed independently; the published per-row x/y/f values are not
        // reproduced, only the time column lands close.
        assert_relative_eq!(mean.x_pct, 3.108003423674094, epsilon = 1e-9);
        assert_relative_eq!(mean.y_pct, -9.871979505838269, epsilon = 1e-9);
        assert_relative_eq!(mean.f_pct, -11.488770365026875, epsilon = 1e-9);
        assert_relative_eq!(mean.t_pct, 7.00644390887999, epsilon = 1e-9);
        assert_relative_eq!(rows[0].x_pct, 100.0 * (6.8 - 2.8) / 6.8, epsilon = 1e-12);
    }

    #[test]
    fn trial_csv_layout() {
        let results: Vec<TrialResult> = (1..=10).map(|i| trial(i, -0.04, 12.345, -0.004, 8.25)).collect();
        let text = format_trials_csv(&results, true);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[0], "trial,x_cm,y_cm,f_rad,t_s,status,path_m");
        assert_eq!(lines[1], "1,0.0,12.3,0.00,8.2,arrived,2.00");
        let no_f = format_trials_csv(&results[..1], false);
        assert_eq!(no_f.lines().next().unwrap(), "trial,x_cm,y_cm,t_s,status,path_m");
    }

    #[test]
    fn emit_writes_all_tables() {
        let dir = std::env::temp_dir().join(format!("teledrive-emit-{}", std::process::id()));
        let a = vec![trial(1, 1.0, 1.0, 0.0, 8.0)];
        let m = vec![trial(1, 2.0, 2.0, 0.1, 10.0)];
        let (files, console) = emit(&dir, "doorway", Some(&a), Some(&m)).unwrap();
        assert_eq!(files.len(), 3);
        let cmp = std::fs::read_to_string(dir.join("doorway_comparison.csv")).unwrap();
        assert_eq!(cmp, "trial,x_pct,y_pct,t_pct\n1,50,50,20\nResults,50,50,20\n");
        assert!(console.contains("doorway / auto"));
        assert!(matches!(emit(&dir, "doorway", None, Some(&[])), Err(EmitError::Empty)));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
