//! CSV formats: curves (`theta,x,y`) and diagnostics series.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{param, Curve};
use crate::evolve::DiagnosticsRecord;
use crate::{Error, Point, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    theta: f64,
    x: f64,
    y: f64,
}

pub fn write_curve<W: Write>(writer: W, curve: &Curve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = curve.n_markers();
    for (i, p) in curve.points().iter().enumerate() {
        w.serialize(CurveRow {
            theta: param(i, n),
            x: p.x,
            y: p.y,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve; the `theta` column must be the uniform grid `2 pi i / N`.
pub fn read_curve<R: Read>(reader: R, gamma: f64) -> Result<Curve> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta", "x", "y"] {
        return Err(Error::CurveFile(format!(
            "expected header theta,x,y, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = r
        .deserialize::<CurveRow>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if (row.theta - param(i, n)).abs() > 1e-9 {
            return Err(Error::CurveFile(format!(
                "row {i}: theta {} is not on the uniform grid (expected {})",
                row.theta,
                param(i, n)
            )));
        }
    }
    Curve::new(rows.iter().map(|r| Point::new(r.x, r.y)).collect(), gamma)
}

pub fn write_curve_file(path: &Path, curve: &Curve) -> Result<()> {
    write_curve(std::fs::File::create(path)?, curve)
}

pub fn read_curve_file(path: &Path, gamma: f64) -> Result<Curve> {
    read_curve(std::fs::File::open(path)?, gamma)
}

/// Writes `t,area,b,holder,q,sup_grad_v,max_speed,gronwall_rhs,area_flux`.
pub fn write_diagnostics<W: Write>(writer: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(DIAGNOSTICS_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const DIAGNOSTICS_COLUMNS: [&str; 9] = [
    "t",
    "area",
    "b",
    "holder",
    "q",
    "sup_grad_v",
    "max_speed",
    "gronwall_rhs",
    "area_flux",
];

pub fn read_diagnostics<R: Read>(reader: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

pub fn write_diagnostics_file(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_diagnostics(std::fs::File::create(path)?, records)
}

pub fn read_diagnostics_file(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    read_diagnostics(std::fs::File::open(path)?)
}
