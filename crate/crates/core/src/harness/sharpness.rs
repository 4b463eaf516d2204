use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::family::rectangle;
use super::pipeline::{solve_pde, Framed, Settings};

/// `pi^2 / (4 - eps^2)`, the first Neumann eigenvalue of
/// `[0, sqrt(4 - eps^2)] x [0, eps]`.
pub fn rectangle_oracle(eps: f64) -> f64 {
    PI * PI / (4.0 - eps * eps)
}

/// `(oracle - pi^2/4) / eps^2 = pi^2 / (4 (4 - eps^2))`.
pub fn rectangle_slack_ratio(eps: f64) -> f64 {
    PI * PI / (4.0 * (4.0 - eps * eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub eps: f64,
    pub mu_fem: f64,
    pub mu_oracle: f64,
    pub slack: f64,
    pub slack_ratio: f64,
    pub oracle_ratio: f64,
    /// `|mu_fem - mu_oracle| / mu_oracle`.
    pub rel_error: f64,
    /// `|slack_ratio - oracle_ratio| / oracle_ratio`.
    pub ratio_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessTable {
    /// Sorted by decreasing eps.
    pub rows: Vec<SharpnessRow>,
    /// The tabulated `slack / eps^2` decreases with eps.
    pub monotone: bool,
}

impl SharpnessTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("eps        mu_fem       mu_oracle    slack        slack/eps^2  rel_error\n");
        for r in &self.rows {
            s += &format!(
                "{:<10.4} {:<12.8} {:<12.8} {:<12.6e} {:<12.8} {:.3e}{}\n",
                r.eps,
                r.mu_fem,
                r.mu_oracle,
                r.slack,
                r.slack_ratio,
                r.rel_error,
                if r.pass { "" } else { "  FAIL" }
            );
        }
        s
    }
}

/// FEM on thin rectangles against separation of variables. Each row passes
/// when the eigenvalue is within 1% of the oracle.
pub fn sharpness_check(eps_list: &[f64], settings: &Settings) -> Result<SharpnessTable> {
    for &e in eps_list {
        if !(e > 0.0 && e <= 0.3) {
            return Err(Error::OutOfRange { what: "eps", value: e, lo: 0.0, hi: 0.3 });
        }
    }
    let mut rows = eps_list
        .par_iter()
        .map(|&eps| {
            let mut framed = Framed::new(&rectangle(eps)?)?;
            let mu_fem = solve_pde(&mut framed, settings)?.solution.mu1;
            let mu_oracle = rectangle_oracle(eps);
            let slack = mu_fem - PI * PI / 4.0;
            let oracle_ratio = rectangle_slack_ratio(eps);
            let rel_error = (mu_fem - mu_oracle).abs() / mu_oracle;
            Ok(SharpnessRow {
                eps,
                mu_fem,
                mu_oracle,
                slack,
                slack_ratio: slack / (eps * eps),
                oracle_ratio,
                rel_error,
                ratio_error: (slack / (eps * eps) - oracle_ratio).abs() / oracle_ratio,
                pass: rel_error <= 1e-2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = rows.windows(2).all(|w| w[1].slack_ratio <= w[0].slack_ratio);
    Ok(SharpnessTable { rows, monotone })
}
