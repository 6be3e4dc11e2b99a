//! CSV output: UTF-8, comma-separated, one header row.

use std::path::Path;

use minrays::asymptotic::HorofunctionField;
use minrays::engine::{cumulative_f_length, PolylinePath};
use minrays::FinslerMetric;

use crate::LabError;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, LabError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    csv::Writer::from_path(path)
        .map_err(|e| LabError::Csv(path.display().to_string(), e.to_string()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabError + '_ {
    move |e| LabError::Csv(path.display().to_string(), e.to_string())
}

/// Columns `index, theta, rho, cumulative_F_length`.
pub fn write_path(path: &Path, metric: &FinslerMetric, p: &PolylinePath) -> Result<(), LabError> {
    let lengths = cumulative_f_length(metric, p)?;
    let mut w = writer(path)?;
    w.write_record(["index", "theta", "rho", "cumulative_F_length"])
        .map_err(csv_err(path))?;
    for (i, (v, l)) in p.vertices().iter().zip(&lengths).enumerate() {
        w.write_record([
            i.to_string(),
            v.theta().to_string(),
            v.rho().to_string(),
            l.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// Columns `theta, rho, u`.
pub fn write_field(path: &Path, u: &HorofunctionField) -> Result<(), LabError> {
    let mut w = writer(path)?;
    w.write_record(["theta", "rho", "u"])
        .map_err(csv_err(path))?;
    for (p, v) in u.grid.points().iter().zip(&u.values) {
        w.write_record([p.theta().to_string(), p.rho().to_string(), v.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// A table with the given header and rows of numbers.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), LabError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}
