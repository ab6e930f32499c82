use super::tracers::TracerGrid;
use crate::{Error, Result, C64};

/// Complex derivatives of the flow map at every stencil center.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiField {
    pub mu: Vec<C64>,
    /// `(1 + |μ|) / (1 - |μ|)`; infinite where `|μ| ≥ 1`.
    pub k_local: Vec<f64>,
    /// `det DX = |∂X|² - |∂̄X|²`.
    pub jacobian: Vec<f64>,
    pub dz: Vec<C64>,
    pub dzbar: Vec<C64>,
}

impl BeltramiField {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn max_k(&self) -> f64 {
        self.k_local.iter().copied().fold(1.0, f64::max)
    }

    /// True if every node is locally quasiconformal.
    pub fn all_subunit(&self) -> bool {
        self.mu.iter().all(|m| m.norm() < 1.0)
    }
}

/// `log((1 + m) / (1 - m))` for `0 ≤ m < 1`.
pub fn log_distortion(m: f64) -> f64 {
    if m >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * m.atanh()
    }
}

/// `μ = ∂̄X / ∂X` by centered differences on each stencil.
pub fn beltrami(tracers: &TracerGrid) -> Result<BeltramiField> {
    let s = tracers.spacing;
    let x = &tracers.current;
    let n = tracers.stencils.len();
    let mut out = BeltramiField {
        mu: Vec::with_capacity(n),
        k_local: Vec::with_capacity(n),
        jacobian: Vec::with_capacity(n),
        dz: Vec::with_capacity(n),
        dzbar: Vec::with_capacity(n),
    };
    for st in &tracers.stencils {
        let xx = (x[st.east] - x[st.west]) / (2.0 * s);
        let xy = (x[st.north] - x[st.south]) / (2.0 * s);
        let dz = (xx - C64::i() * xy) / 2.0;
        let dzbar = (xx + C64::i() * xy) / 2.0;
        if dz.norm() < 1e-12 {
            let (i, j) = tracers.lattice[st.center];
            return Err(Error::DegenerateDerivative { i, j, value: dz.norm() });
        }
        let mu = dzbar / dz;
        let m = mu.norm();
        out.mu.push(mu);
        out.k_local.push(if m < 1.0 { (1.0 + m) / (1.0 - m) } else { f64::INFINITY });
        out.jacobian.push(dz.norm_sqr() - dzbar.norm_sqr());
        out.dz.push(dz);
        out.dzbar.push(dzbar);
    }
    Ok(out)
}
