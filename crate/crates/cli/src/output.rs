//! CSV and JSON writers. Floats use the shortest representation that parses
//! back to the same value, so equal runs produce identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use robust_eq_core::dynamics::Trajectory;

use crate::error::{CliError, CliResult};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Serializes rows of already formatted cells.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::new(crate::error::ErrorKind::Io, None, e);
    w.write_record(header).map_err(map)?;
    for r in rows {
        w.write_record(&r).map_err(map)?;
    }
    w.into_inner().map_err(|e| CliError::new(crate::error::ErrorKind::Io, None, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Columns `n, x0.., y0.., dist_ref, delta_n, gamma_n`; state columns are
/// omitted when the run did not record states.
pub fn trajectory_csv(t: &Trajectory) -> CliResult<Vec<u8>> {
    let states = t.has_states();
    let mut header = vec!["n".to_string()];
    if states {
        header.extend((0..t.dim).map(|j| format!("x{j}")));
        header.extend((0..t.dim).map(|j| format!("y{j}")));
    }
    header.extend(["dist_ref", "delta_n", "gamma_n"].map(String::from));
    let has_dist = t.dist.len() == t.len();
    let rows = (0..t.len()).map(|k| {
        let mut r = vec![t.steps[k].to_string()];
        if states {
            r.extend(t.x(k).iter().map(|&v| fmt_f64(v)));
            r.extend(t.y(k).iter().map(|&v| fmt_f64(v)));
        }
        r.push(if has_dist { fmt_f64(t.dist[k]) } else { String::new() });
        r.push(fmt_opt(t.delta[k]));
        r.push(fmt_f64(t.gamma[k]));
        r
    });
    csv_bytes(&header, rows)
}

pub fn distances_csv(steps: &[u64], dist: &[f64]) -> CliResult<Vec<u8>> {
    let header = ["n", "dist_ref"].map(String::from);
    csv_bytes(&header, steps.iter().zip(dist).map(|(n, d)| vec![n.to_string(), fmt_f64(*d)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0, -2.5e-300, 1e300, 1.0 / 3.0, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }
}
