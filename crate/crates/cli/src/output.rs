//! Deterministic data files and atomic writes.

use std::io::Write;
use std::path::Path;

use holonome::experiments::{ObservableSeries, SweepGrid};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Shortest decimal that round-trips to the same `f64`.
fn num(v: f64) -> String {
    format!("{v}")
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Vec<u8> {
    writer.into_inner().expect("writing to memory cannot fail")
}

/// `t,P1,P2,P3,F`, one row per sample.
pub fn series_csv(series: &ObservableSeries) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "P1", "P2", "P3", "F"]).expect("in-memory write");
    for k in 0..series.len() {
        w.write_record([
            num(series.times[k]),
            num(series.p1[k]),
            num(series.p2[k]),
            num(series.p3[k]),
            num(series.fidelity[k]),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Long form `kappa,gamma_m,F` with κ varying slowest.
pub fn grid_csv(grid: &SweepGrid) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kappa", "gamma_m", "F"]).expect("in-memory write");
    for (kappa, row) in grid.kappa_values.iter().zip(&grid.fidelities) {
        for (gamma, f) in grid.gamma_values.iter().zip(row) {
            w.write_record([num(*kappa), num(*gamma), num(*f)]).expect("in-memory write");
        }
    }
    finish(w)
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("outputs always serialize");
    bytes.push(b'\n');
    bytes
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
