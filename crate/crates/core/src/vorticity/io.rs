//! Shared CSV layout for grid-valued data: a header row naming the geometry,
//! one geometry row, a header row naming the value columns, then one row per
//! cell in storage order.

use std::path::Path;

use super::grid::GridGeometry;
use crate::{Error, Result, C64};

const GEOMETRY_HEADER: [&str; 5] = ["nx", "ny", "origin_x", "origin_y", "h"];

pub(crate) fn write_grid_csv(
    path: &Path,
    geometry: &GridGeometry,
    columns: &[&str],
    row: impl Fn(usize) -> Vec<f64>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    w.write_record(GEOMETRY_HEADER)?;
    w.write_record([
        geometry.nx.to_string(),
        geometry.ny.to_string(),
        geometry.origin.re.to_string(),
        geometry.origin.im.to_string(),
        geometry.h.to_string(),
    ])?;
    w.write_record(columns)?;
    for k in 0..geometry.len() {
        w.write_record(row(k).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn read_grid_csv(path: &Path, ncols: usize) -> Result<(GridGeometry, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = r.records();
    let bad = |line: usize, msg: &str| Error::Input(format!("{}:{line}: {msg}", path.display()));
    let mut next = |line: usize| -> Result<csv::StringRecord> {
        records
            .next()
            .ok_or_else(|| bad(line, "unexpected end of file"))?
            .map_err(Error::from)
    };
    let head = next(1)?;
    if head.iter().collect::<Vec<_>>() != GEOMETRY_HEADER {
        return Err(bad(1, "expected geometry header nx,ny,origin_x,origin_y,h"));
    }
    let geo = next(2)?;
    let num = |s: &str, line: usize| s.trim().parse::<f64>().map_err(|_| bad(line, "not a number"));
    if geo.len() != 5 {
        return Err(bad(2, "expected 5 geometry fields"));
    }
    let nx = geo[0].trim().parse::<usize>().map_err(|_| bad(2, "nx is not an integer"))?;
    let ny = geo[1].trim().parse::<usize>().map_err(|_| bad(2, "ny is not an integer"))?;
    let geometry = GridGeometry::new(C64::new(num(&geo[2], 2)?, num(&geo[3], 2)?), num(&geo[4], 2)?, nx, ny)?;
    let cols = next(3)?;
    if cols.len() != ncols {
        return Err(bad(3, &format!("expected {ncols} value columns")));
    }
    let mut rows = Vec::with_capacity(geometry.len());
    for k in 0..geometry.len() {
        let line = k + 4;
        let rec = next(line)?;
        if rec.len() != ncols {
            return Err(bad(line, &format!("expected {ncols} values")));
        }
        rows.push(rec.iter().map(|s| num(s, line)).collect::<Result<Vec<_>>>()?);
    }
    Ok((geometry, rows))
}
