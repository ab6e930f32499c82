use serde::{Deserialize, Serialize};

use super::grid::VorticityGrid;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub epsilon: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::input(format!("mollifier radius must be > 0, got {epsilon}")));
        }
        Ok(MollifierSpec { epsilon })
    }
}

/// Discrete convolution with the bump `(1 - (r/ε)²)²` on `r < ε`,
/// normalized to unit sum on the grid lattice.
///
/// The weights are nonnegative and sum to one, so the output never exceeds
/// the input in L∞ or (provided the widened support stays on the grid) L¹.
/// Returns the input unchanged when `ε < h`.
pub fn mollify(data: &VorticityGrid, spec: MollifierSpec) -> Result<VorticityGrid> {
    MollifierSpec::new(spec.epsilon)?;
    data.validate()?;
    let g = data.geometry;
    if spec.epsilon < g.h {
        return Ok(data.clone());
    }
    let reach = (spec.epsilon / g.h).floor() as isize;
    let mut weights = Vec::new();
    let mut total = 0.0;
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let r2 = ((di * di + dj * dj) as f64) * g.h * g.h / (spec.epsilon * spec.epsilon);
            if r2 < 1.0 {
                let w = (1.0 - r2).powi(2);
                weights.push((di, dj, w));
                total += w;
            }
        }
    }
    for w in &mut weights {
        w.2 /= total;
    }

    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let mut out = VorticityGrid::zeros(g);
    for j in 0..ny {
        for i in 0..nx {
            let v = data.values[(j * nx + i) as usize];
            if v == 0.0 {
                continue;
            }
            for &(di, dj, w) in &weights {
                let (a, b) = (i + di, j + dj);
                if a <= 0 || b <= 0 || a >= nx - 1 || b >= ny - 1 {
                    return Err(Error::input(format!(
                        "mollified support near {} leaves the grid interior",
                        g.center(i as usize, j as usize)
                    )));
                }
                out.values[(b * nx + a) as usize] += w * v;
            }
        }
    }
    // a convex combination cannot exceed the input bound; trim rounding
    let linf = data.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut out.values {
        *v = v.clamp(-linf, linf);
    }
    Ok(out)
}

/// Bump profile used by [`mollify`], before lattice normalization.
pub fn bump_profile(z: C64, epsilon: f64) -> f64 {
    let r2 = z.norm_sqr() / (epsilon * epsilon);
    if r2 < 1.0 {
        (1.0 - r2).powi(2)
    } else {
        0.0
    }
}
