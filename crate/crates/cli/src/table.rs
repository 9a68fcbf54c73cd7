//! Numeric CSV tables and JSON reports.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a table
//! back and writing it again reproduces the same bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rotolab_core::{ReducedTrajectory, Trajectory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_table<W: Write>(w: W, table: &Table) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&table.headers)?;
    for row in &table.rows {
        out.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(r: R) -> CliResult<Table> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Config(format!("row {}: {e}", line + 1)))?;
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

pub fn write_table_file(path: &Path, table: &Table) -> CliResult<()> {
    write_table(BufWriter::new(File::create(path)?), table)
}

pub fn trajectory_headers(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 1..=n {
        h.extend((1..=4).map(|k| format!("q{i}_{k}")));
        h.extend((1..=4).map(|k| format!("v{i}_{k}")));
    }
    h.extend(rotolab_core::manifold::Bivector::LABELS.iter().map(|l| l.to_string()));
    h.push("drift".into());
    h
}

pub fn trajectory_table(tr: &Trajectory) -> Table {
    let n = tr.samples[0].state.bodies.len();
    let rows = tr
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![s.t()];
            for b in &s.state.bodies {
                row.extend(b.q.0);
                row.extend(b.v.0);
            }
            row.extend(s.angular_momentum.0);
            row.push(s.drift);
            row
        })
        .collect();
    Table { headers: trajectory_headers(n), rows }
}

pub const REDUCED_HEADERS: [&str; 8] = ["t", "r", "rdot", "theta", "phi", "delta_spread", "res1_max", "res2_max"];

pub fn reduced_table(tr: &ReducedTrajectory) -> Table {
    let rows = tr
        .samples
        .iter()
        .map(|s| {
            vec![s.t, s.fiber.r(), s.fiber.rdot, s.fiber.theta, s.fiber.phi, s.delta_spread, s.res1_max, s.res2_max]
        })
        .collect();
    Table { headers: REDUCED_HEADERS.iter().map(|s| s.to_string()).collect(), rows }
}

/// Provenance block carried by every JSON output.
#[derive(Debug, Serialize)]
pub struct Reproducibility<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a ExperimentConfig,
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    reproducibility: Reproducibility<'a>,
    result: &'a T,
}

pub fn json_report<T: Serialize>(command: &str, config: &ExperimentConfig, result: &T) -> CliResult<String> {
    let env = Envelope {
        reproducibility: Reproducibility {
            tool: "rotolab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
        },
        result,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json_file<T: Serialize>(path: &Path, command: &str, config: &ExperimentConfig, result: &T) -> CliResult<()> {
    std::fs::write(path, json_report(command, config, result)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-20, 123456789.125, -2.5e300, std::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn table_round_trip_is_byte_identical() {
        let t = Table {
            headers: vec!["t".into(), "x".into()],
            rows: vec![vec![0.0, 0.1], vec![0.30000000000000004, -1e-17]],
        };
        let mut a = Vec::new();
        write_table(&mut a, &t).unwrap();
        let back = read_table(a.as_slice()).unwrap();
        assert_eq!(back, t);
        let mut b = Vec::new();
        write_table(&mut b, &back).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_header_layout() {
        let h = trajectory_headers(2);
        assert_eq!(h.len(), 1 + 16 + 6 + 1);
        assert_eq!(h[1], "q1_1");
        assert_eq!(h[5], "v1_1");
        assert_eq!(h[9], "q2_1");
        assert_eq!(h[17], "L12");
        assert_eq!(h[22], "L34");
        assert_eq!(h[23], "drift");
    }
}
