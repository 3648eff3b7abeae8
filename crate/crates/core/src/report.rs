//! Per-instance benchmark rows and their CSV form.
//!
//! The CSV has one header row, one row per instance, and the aggregate
//! block appended as `#`-prefixed comment lines. Missing oracle values are
//! written as `NA`. Wall times live only in the `t_*` columns and the
//! `mean_t_*` aggregates.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 10] = [
    "instance",
    "init_obj",
    "ls_obj",
    "final_obj",
    "oracle_obj",
    "gap_init_pct",
    "gap_ls_pct",
    "gap_final_pct",
    "t_heuristic_s",
    "t_oracle_s",
];

const MISSING: &str = "NA";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub instance: usize,
    pub init_obj: f64,
    pub ls_obj: f64,
    pub final_obj: f64,
    pub oracle_obj: Option<f64>,
    pub gap_init_pct: Option<f64>,
    pub gap_ls_pct: Option<f64>,
    pub gap_final_pct: Option<f64>,
    pub t_heuristic_s: f64,
    pub t_oracle_s: Option<f64>,
}

/// `100 * (value - optimum) / optimum`.
pub fn gap_pct(value: f64, optimum: f64) -> f64 {
    100.0 * (value - optimum) / optimum
}

impl InstanceRow {
    pub fn new(
        instance: usize,
        [init_obj, ls_obj, final_obj]: [f64; 3],
        oracle_obj: Option<f64>,
        t_heuristic_s: f64,
        t_oracle_s: Option<f64>,
    ) -> Self {
        let gap = |v: f64| oracle_obj.map(|o| gap_pct(v, o));
        InstanceRow {
            instance,
            init_obj,
            ls_obj,
            final_obj,
            oracle_obj,
            gap_init_pct: gap(init_obj),
            gap_ls_pct: gap(ls_obj),
            gap_final_pct: gap(final_obj),
            t_heuristic_s,
            t_oracle_s,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<InstanceRow>,
}

/// Summary over the rows that have an oracle value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregates {
    pub rows: usize,
    pub no_oracle_rows: usize,
    pub mean_gap_init_pct: Option<f64>,
    pub mean_gap_ls_pct: Option<f64>,
    pub mean_gap_final_pct: Option<f64>,
    pub max_gap_final_pct: Option<f64>,
    /// Rows whose final gap is at most 2%.
    pub within_2pct: usize,
    pub mean_t_heuristic_s: Option<f64>,
    pub mean_t_oracle_s: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl ExperimentReport {
    pub fn aggregates(&self) -> Aggregates {
        let oracle: Vec<&InstanceRow> = self
            .rows
            .iter()
            .filter(|r| r.oracle_obj.is_some())
            .collect();
        Aggregates {
            rows: self.rows.len(),
            no_oracle_rows: self.rows.len() - oracle.len(),
            mean_gap_init_pct: mean(oracle.iter().filter_map(|r| r.gap_init_pct)),
            mean_gap_ls_pct: mean(oracle.iter().filter_map(|r| r.gap_ls_pct)),
            mean_gap_final_pct: mean(oracle.iter().filter_map(|r| r.gap_final_pct)),
            max_gap_final_pct: oracle
                .iter()
                .filter_map(|r| r.gap_final_pct)
                .reduce(f64::max),
            within_2pct: oracle
                .iter()
                .filter(|r| r.gap_final_pct.is_some_and(|g| g <= 2.0))
                .count(),
            mean_t_heuristic_s: mean(self.rows.iter().map(|r| r.t_heuristic_s)),
            mean_t_oracle_s: mean(oracle.iter().filter_map(|r| r.t_oracle_s)),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        let opt = |x: Option<f64>| x.map_or_else(|| MISSING.to_string(), |v| v.to_string());
        for r in &self.rows {
            let fields = [
                r.instance.to_string(),
                r.init_obj.to_string(),
                r.ls_obj.to_string(),
                r.final_obj.to_string(),
                opt(r.oracle_obj),
                opt(r.gap_init_pct),
                opt(r.gap_ls_pct),
                opt(r.gap_final_pct),
                r.t_heuristic_s.to_string(),
                opt(r.t_oracle_s),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        let a = self.aggregates();
        let _ = writeln!(out, "# rows,{}", a.rows);
        let _ = writeln!(out, "# no_oracle_rows,{}", a.no_oracle_rows);
        let _ = writeln!(out, "# mean_gap_init_pct,{}", opt(a.mean_gap_init_pct));
        let _ = writeln!(out, "# mean_gap_ls_pct,{}", opt(a.mean_gap_ls_pct));
        let _ = writeln!(out, "# mean_gap_final_pct,{}", opt(a.mean_gap_final_pct));
        let _ = writeln!(out, "# max_gap_final_pct,{}", opt(a.max_gap_final_pct));
        let _ = writeln!(out, "# within_2pct,{}", a.within_2pct);
        let _ = writeln!(out, "# mean_t_heuristic_s,{}", opt(a.mean_t_heuristic_s));
        let _ = writeln!(out, "# mean_t_oracle_s,{}", opt(a.mean_t_oracle_s));
        out
    }

    pub fn from_csv(text: &str) -> Result<ExperimentReport> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let bad = |m: String| Error::InvalidInput(format!("report CSV: {m}"));
        let header = reader.headers().map_err(|e| bad(e.to_string()))?;
        if header.iter().ne(COLUMNS.iter().copied()) {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("column {}: {e}", COLUMNS[i])))
            };
            let opt = |i: usize| -> Result<Option<f64>> {
                if &rec[i] == MISSING {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            rows.push(InstanceRow {
                instance: rec[0].parse().map_err(|e| bad(format!("instance: {e}")))?,
                init_obj: num(1)?,
                ls_obj: num(2)?,
                final_obj: num(3)?,
                oracle_obj: opt(4)?,
                gap_init_pct: opt(5)?,
                gap_ls_pct: opt(6)?,
                gap_final_pct: opt(7)?,
                t_heuristic_s: num(8)?,
                t_oracle_s: opt(9)?,
            });
        }
        Ok(ExperimentReport { rows })
    }
}

pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentReport::from_csv(&text)
}

/// The CSV with every wall-time column and aggregate removed, for comparing
/// runs.
pub fn strip_timing(csv_text: &str) -> String {
    let keep: Vec<bool> = COLUMNS.iter().map(|c| !c.starts_with("t_")).collect();
    let mut out = String::new();
    for line in csv_text.lines() {
        if line.starts_with("# mean_t_") {
            continue;
        }
        if line.starts_with('#') {
            out.push_str(line);
        } else {
            let fields: Vec<&str> = line
                .split(',')
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(f, _)| f)
                .collect();
            out.push_str(&fields.join(","));
        }
        out.push('\n');
    }
    out
}
