use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::caps::CAPS;

/// Bumped whenever a column changes meaning, so frozen caps stay comparable.
pub const SCHEMA_VERSION: u32 = 1;

/// One domain of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub schema_version: u32,
    pub id: String,
    pub family: String,
    pub eps_target: f64,
    pub d: f64,
    /// Measured width after normalization.
    pub eps: f64,
    pub mirrored: bool,
    /// Mesh size of the finest level.
    pub mesh_edge: f64,
    pub nodes: usize,
    pub fem_rel_change: f64,
    pub fem_converged: bool,
    pub mu1: f64,
    pub mu1_extrapolated: f64,
    pub mu1n: f64,
    /// Galerkin against shooting, relative.
    pub shooting_rel: f64,
    /// `mu1 - pi^2/4`.
    pub slack: f64,
    /// `slack / eps^2`.
    pub c_hat: f64,
    /// `mu1 - mu1n`.
    pub gap_ode: f64,
    /// `|int eta utilde'| / int h utilde^2`.
    pub eta_correction: f64,
    pub identity_residual: f64,
    pub r_eta5: f64,
    pub r_gap: f64,
    pub r_vert: f64,
    pub r_eta10: f64,
    pub r_etahat10: f64,
    pub r_int10: f64,
    pub poincare_ratio: f64,
    /// Largest `|D u| / (sqrt(mu) sqrt(1 - u^2))`.
    pub li_yau: f64,
    /// Largest binned `|D u| / max(eps, ||x||)`.
    pub grad_profile: f64,
    pub grad_end: f64,
    /// Weighted eigenvalue of the regularized profile.
    pub mu1n_reg: f64,
    pub liouville_residual: f64,
    /// `pi^2/d^2 + T_zeta / int h (zeta')^2` for the regularized profile.
    pub liouville_lower: f64,
}

impl InequalityRecord {
    /// `gap_ode + eta_correction + identity allowance`; the discrete form of
    /// `mu1 >= mu1n - int eta utilde' / int h utilde^2` asks for `>= 0`.
    pub fn eta_margin(&self) -> f64 {
        self.gap_ode + self.eta_correction + self.identity_residual * self.mu1
    }

    /// `mu1n_reg - liouville_lower` plus the identity allowance.
    pub fn liouville_margin(&self) -> f64 {
        self.mu1n_reg - self.liouville_lower + self.liouville_residual * self.mu1n_reg
    }

    /// Invariants every record must satisfy: Payne-Weinberger at the
    /// discrete level, the weighted eigenvalue bracket, the direction of the
    /// eigenvalue identity, the identity residual, Li-Yau and, for the
    /// deterministic families, the frozen caps.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let pw = PI * PI / 4.0;
        if !(self.slack >= -1e-3) {
            v.push(format!("slack {:e} < -1e-3", self.slack));
        }
        if !(self.mu1n >= pw * (1.0 - 1e-3) && self.mu1n <= 25.025) {
            v.push(format!("mu1n {} outside [pi^2/4 (1 - 1e-3), 25.025]", self.mu1n));
        }
        if !(self.eta_margin() >= 0.0) {
            v.push(format!("mu1 - mu1n + eta correction + allowance = {:e} < 0", self.eta_margin()));
        }
        if !(self.identity_residual <= 1e-2) {
            v.push(format!("identity residual {:e} > 1e-2", self.identity_residual));
        }
        if !(self.li_yau <= 1.1) {
            v.push(format!("Li-Yau ratio {} > 1.1", self.li_yau));
        }
        if !(self.liouville_margin() >= 0.0) {
            v.push(format!("Liouville lower bound exceeds mu1n by {:e}", -self.liouville_margin()));
        }
        if self.family != "random_convex" {
            for c in CAPS.violations(self) {
                v.push(format!("{} = {} above cap {}", c.ratio, c.value, c.cap));
            }
        }
        v
    }

    fn cells(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:.17e}");
        vec![
            ("schema_version", self.schema_version.to_string()),
            ("id", self.id.clone()),
            ("family", self.family.clone()),
            ("eps_target", f(self.eps_target)),
            ("d", f(self.d)),
            ("eps", f(self.eps)),
            ("mirrored", self.mirrored.to_string()),
            ("mesh_edge", f(self.mesh_edge)),
            ("nodes", self.nodes.to_string()),
            ("fem_rel_change", f(self.fem_rel_change)),
            ("fem_converged", self.fem_converged.to_string()),
            ("mu1", f(self.mu1)),
            ("mu1_extrapolated", f(self.mu1_extrapolated)),
            ("mu1n", f(self.mu1n)),
            ("shooting_rel", f(self.shooting_rel)),
            ("slack", f(self.slack)),
            ("c_hat", f(self.c_hat)),
            ("gap_ode", f(self.gap_ode)),
            ("eta_correction", f(self.eta_correction)),
            ("identity_residual", f(self.identity_residual)),
            ("r_eta5", f(self.r_eta5)),
            ("r_gap", f(self.r_gap)),
            ("r_vert", f(self.r_vert)),
            ("r_eta10", f(self.r_eta10)),
            ("r_etahat10", f(self.r_etahat10)),
            ("r_int10", f(self.r_int10)),
            ("poincare_ratio", f(self.poincare_ratio)),
            ("li_yau", f(self.li_yau)),
            ("grad_profile", f(self.grad_profile)),
            ("grad_end", f(self.grad_end)),
            ("mu1n_reg", f(self.mu1n_reg)),
            ("liouville_residual", f(self.liouville_residual)),
            ("liouville_lower", f(self.liouville_lower)),
        ]
    }
}

pub fn write_records_csv<W: Write>(records: &[InequalityRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let Some(first) = records.first() else {
        wr.flush()?;
        return Ok(());
    };
    wr.write_record(first.cells().iter().map(|c| c.0))?;
    for r in records {
        wr.write_record(r.cells().iter().map(|c| c.1.as_str()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<InequalityRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
