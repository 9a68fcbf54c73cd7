//! Cartesian sweeps over angle slots, evaluated on a worker pool.
//!
//! Cells are processed in fixed-size chunks; each chunk is evaluated in
//! parallel and written in cell order, so the output does not depend on the
//! thread count. An interrupt stops the sweep between chunks and appends a
//! marker row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use rotolab_core::{polygon_report, solve_masses, Error, FeasibilityStatus, RotopulsatorShape, SolverOptions};
use serde::Serialize;

use crate::commands::ensure_dir;
use crate::config::{ExperimentConfig, Family, RangeConfig};
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_json_file};

const CHUNK: usize = 512;

pub const TRUNCATION_MARKER: &str = "#truncated";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub status: &'static str,
    pub residual_norm: Option<f64>,
    pub alpha_regular: &'static str,
    pub beta_regular: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub written: usize,
    pub truncated: bool,
    pub feasible: usize,
    pub infeasible: usize,
    pub underdetermined: usize,
    pub singular: usize,
    pub invalid: usize,
}

fn cell_angles(base: &(Vec<f64>, Vec<f64>), ranges: &[RangeConfig], mut cell: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut a, mut b) = base.clone();
    // last range varies fastest
    for r in ranges.iter().rev() {
        let k = cell % r.count;
        cell /= r.count;
        let slot = match r.family {
            Family::Alpha => &mut a,
            Family::Beta => &mut b,
        };
        slot[r.index - 1] = r.value(k);
    }
    (a, b)
}

fn regularity(angles: &[f64], tol: f64) -> &'static str {
    match polygon_report(angles, tol) {
        Ok(p) if p.regular => "true",
        Ok(_) => "false",
        Err(_) => "ambiguous",
    }
}

pub fn evaluate_cell(alphas: Vec<f64>, betas: Vec<f64>, opts: &SolverOptions, angle_tol: f64) -> CellResult {
    let (status, residual_norm) = match RotopulsatorShape::angles_only(&alphas, &betas) {
        Err(_) => ("Invalid", None),
        Ok(()) => match solve_masses(&alphas, &betas, opts) {
            Ok(res) => (
                match res.status {
                    FeasibilityStatus::Feasible => "Feasible",
                    FeasibilityStatus::Infeasible => "Infeasible",
                    FeasibilityStatus::Underdetermined => "Underdetermined",
                },
                Some(res.residual_norm),
            ),
            Err(Error::SingularDenominator { .. }) => ("Singular", None),
            Err(_) => ("Invalid", None),
        },
    };
    CellResult {
        alpha_regular: regularity(&alphas, angle_tol),
        beta_regular: regularity(&betas, angle_tol),
        alphas,
        betas,
        status,
        residual_norm,
    }
}

fn header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n).map(|i| format!("alpha_{i}")).collect();
    h.extend((1..=n).map(|i| format!("beta_{i}")));
    h.extend(["status", "residual_norm", "alpha_regular", "beta_regular"].map(String::from));
    h
}

fn record(c: &CellResult) -> Vec<String> {
    let mut row: Vec<String> = c.alphas.iter().chain(&c.betas).map(|x| fmt_f64(*x)).collect();
    row.push(c.status.into());
    row.push(c.residual_norm.map(fmt_f64).unwrap_or_default());
    row.push(c.alpha_regular.into());
    row.push(c.beta_regular.into());
    row
}

/// Runs the sweep, writing CSV rows to `w` in cell order.
pub fn run_sweep<W: Write>(
    cfg: &ExperimentConfig,
    threads: usize,
    interrupt: &AtomicBool,
    w: W,
) -> CliResult<SweepSummary> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let base = cfg.angles()?;
    let n = base.0.len();
    let cells: usize = sweep.ranges.iter().map(|r| r.count).product();
    let opts = cfg.analysis.solver_options();
    let tol = cfg.analysis.angle_tol;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;

    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    out.write_record(header(n))?;
    let mut summary = SweepSummary {
        cells,
        written: 0,
        truncated: false,
        feasible: 0,
        infeasible: 0,
        underdetermined: 0,
        singular: 0,
        invalid: 0,
    };
    let mut start = 0;
    while start < cells {
        if interrupt.load(Ordering::SeqCst) {
            summary.truncated = true;
            break;
        }
        let end = (start + CHUNK).min(cells);
        let results: Vec<CellResult> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|c| {
                    let (a, b) = cell_angles(&base, &sweep.ranges, c);
                    evaluate_cell(a, b, &opts, tol)
                })
                .collect()
        });
        for c in &results {
            out.write_record(record(c))?;
            match c.status {
                "Feasible" => summary.feasible += 1,
                "Infeasible" => summary.infeasible += 1,
                "Underdetermined" => summary.underdetermined += 1,
                "Singular" => summary.singular += 1,
                _ => summary.invalid += 1,
            }
        }
        out.flush()?;
        summary.written = end;
        start = end;
    }
    if summary.truncated {
        out.write_record([TRUNCATION_MARKER.to_string(), format!("{} of {} cells written", summary.written, cells)])?;
    }
    out.flush()?;
    Ok(summary)
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path, threads: usize, interrupt: &AtomicBool) -> CliResult<SweepSummary> {
    ensure_dir(out)?;
    let file = BufWriter::new(File::create(out.join("sweep.csv"))?);
    let summary = run_sweep(cfg, threads, interrupt, file)?;
    write_json_file(&out.join("sweep.json"), "sweep", cfg, &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(count: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
[shape]
alphas = [0, "2/3 pi", "4/3 pi"]
betas = [0, 0, 0]

[[sweep.ranges]]
family = "alpha"
index = 3
start = 0
end = "2 pi"
count = {count}
"#
        ))
        .unwrap()
    }

    #[test]
    fn cell_order_is_lexicographic() {
        let cfg = ExperimentConfig::from_toml(
            r#"
[shape]
alphas = [0, 1, 2]
betas = [0, 0, 0]
[[sweep.ranges]]
family = "alpha"
index = 2
start = 0
end = 2
count = 2
[[sweep.ranges]]
family = "beta"
index = 3
start = 0
end = 3
count = 3
"#,
        )
        .unwrap();
        let sw = cfg.sweep.as_ref().unwrap();
        let base = cfg.angles().unwrap();
        let seen: Vec<(f64, f64)> = (0..6)
            .map(|c| {
                let (a, b) = cell_angles(&base, &sw.ranges, c);
                (a[1], b[2])
            })
            .collect();
        assert_eq!(seen, vec![(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]);
    }

    #[test]
    fn empty_range_gives_header_only() {
        let mut buf = Vec::new();
        let s = run_sweep(&config(0), 2, &AtomicBool::new(false), &mut buf).unwrap();
        assert_eq!(s.cells, 0);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("alpha_1,alpha_2,alpha_3,beta_1"));
    }

    #[test]
    fn interrupt_writes_marker() {
        let mut buf = Vec::new();
        let s = run_sweep(&config(12), 2, &AtomicBool::new(true), &mut buf).unwrap();
        assert!(s.truncated);
        assert_eq!(s.written, 0);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with(TRUNCATION_MARKER));
    }

    #[test]
    fn thread_count_does_not_change_bytes() {
        let cfg = config(36);
        let run = |t| {
            let mut buf = Vec::new();
            run_sweep(&cfg, t, &AtomicBool::new(false), &mut buf).unwrap();
            buf
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn regular_cell_is_feasible_and_coincident_cell_invalid() {
        let mut buf = Vec::new();
        let s = run_sweep(&config(6), 1, &AtomicBool::new(false), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        // α₃ = 4π/3 is cell 4; α₃ = 0 collides with body 1
        assert!(rows[4].contains(",Feasible,"), "{}", rows[4]);
        assert!(rows[0].contains(",Invalid,"), "{}", rows[0]);
        assert_eq!(s.feasible + s.infeasible + s.invalid + s.singular + s.underdetermined, 6);
    }
}
