use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::VorticityGrid;
use crate::complexfield::{CompensatedSum, FieldStats};
use crate::{Error, Result, C64};

/// Lagrangian particle. `omega` never changes along the trajectory; the
/// carried circulation is `omega · area0 · jacobian`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexBlob {
    pub position: C64,
    pub omega: f64,
    pub area0: f64,
    pub jacobian: f64,
}

impl VortexBlob {
    pub fn circulation(&self) -> f64 {
        self.omega * self.area0 * self.jacobian
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.re.is_finite()
            && self.position.im.is_finite()
            && self.omega.is_finite()
            && self.area0.is_finite()
            && self.jacobian.is_finite();
        if !finite || self.area0 <= 0.0 || self.jacobian <= 0.0 {
            return Err(Error::input(format!("invalid blob {self:?}")));
        }
        Ok(())
    }
}

/// One blob per cell with `|value| > threshold`, in storage order.
pub fn to_blobs(data: &VorticityGrid, threshold: f64) -> Vec<VortexBlob> {
    let g = data.geometry;
    let mut out = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = data.get(i, j);
            if v.abs() > threshold {
                out.push(VortexBlob {
                    position: g.center(i, j),
                    omega: v,
                    area0: g.cell_area(),
                    jacobian: 1.0,
                });
            }
        }
    }
    out
}

/// Norms of the transported measure `Σ omega · area0 · jacobian · δ_blob`.
///
/// The support area is the summed current cell area of blobs with nonzero
/// omega; the support radius is measured from their mean position and
/// widened by `reach` (the blob core size).
pub fn blob_stats(blobs: &[VortexBlob], reach: f64) -> FieldStats {
    let mut l1 = CompensatedSum::new();
    let mut area = CompensatedSum::new();
    let mut cx = CompensatedSum::new();
    let mut cy = CompensatedSum::new();
    let mut linf: f64 = 0.0;
    let mut n = 0usize;
    for b in blobs.iter().filter(|b| b.omega != 0.0) {
        l1.add(b.omega.abs() * b.area0 * b.jacobian);
        area.add(b.area0 * b.jacobian);
        linf = linf.max(b.omega.abs());
        cx.add(b.position.re);
        cy.add(b.position.im);
        n += 1;
    }
    if n == 0 {
        return FieldStats::default();
    }
    let center = C64::new(cx.value(), cy.value()) / n as f64;
    let r = blobs
        .iter()
        .filter(|b| b.omega != 0.0)
        .map(|b| (b.position - center).norm())
        .fold(0.0, f64::max);
    FieldStats {
        l1: l1.value(),
        linf,
        support_area: area.value(),
        support_radius: r + reach.max(0.0),
        support_center: center,
    }
}

pub fn save_blobs_csv(path: &Path, blobs: &[VortexBlob]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "omega", "area0", "jacobian"])?;
    for b in blobs {
        w.write_record([
            b.position.re.to_string(),
            b.position.im.to_string(),
            b.omega.to_string(),
            b.area0.to_string(),
            b.jacobian.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_blobs_csv(path: &Path) -> Result<Vec<VortexBlob>> {
    let mut r = csv::Reader::from_path(path)?;
    let expected = ["x", "y", "omega", "area0", "jacobian"];
    if r.headers()?.iter().collect::<Vec<_>>() != expected {
        return Err(Error::input(format!("{}:1: expected header x,y,omega,area0,jacobian", path.display())));
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::input(format!("{}:{line}: not a number", path.display())))?;
        if vals.len() != 5 {
            return Err(Error::input(format!("{}:{line}: expected 5 fields", path.display())));
        }
        let b = VortexBlob {
            position: C64::new(vals[0], vals[1]),
            omega: vals[2],
            area0: vals[3],
            jacobian: vals[4],
        };
        b.validate()
            .map_err(|e| Error::input(format!("{}:{line}: {e}", path.display())))?;
        out.push(b);
    }
    Ok(out)
}
