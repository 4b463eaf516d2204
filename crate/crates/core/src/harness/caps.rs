//! Frozen caps for the bound ratios of the sweep records.
//!
//! Provenance: `cargo run --release -p eigenwidth-core --example derive_caps`
//! sweeps the standard suite (rectangle, isoceles triangle, hex lens at
//! eps 0.2, 0.1, 0.05, 0.025) at refinement level 1, i.e. twice the standard
//! resolution, takes the largest value of every ratio and multiplies it by
//! 2. Regenerate after any change to the ratio definitions and bump
//! `SCHEMA_VERSION` if a column changed meaning.
//!
//! Frozen from schema 1 on 2026-10-18. Largest values at that run:
//! `r_eta5` 0.083 (rectangle 0.2), `r_gap` 0.641 (triangle 0.2), `r_vert`
//! 9.95e-3 (triangle 0.2), `r_eta10` 2.96 (rectangle 0.025), `r_int10` 1.99
//! (rectangle 0.1), `grad_profile` 3.26 (rectangle 0.025).

use serde::{Deserialize, Serialize};

use super::record::{InequalityRecord, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub schema_version: u32,
    /// `sup |eta| / (h eps)`.
    pub r_eta5: f64,
    /// `(sup |utilde - zeta| + sup |utilde' - zeta'|) / eps`.
    pub r_gap: f64,
    /// `int |D_y u|^2 / (eps V)`.
    pub r_vert: f64,
    /// Pointwise improved estimate of `eta`.
    pub r_eta10: f64,
    /// Integrated improved estimate of `eta`.
    pub r_int10: f64,
    /// `|D u| / max(eps, ||x||)`.
    pub grad_profile: f64,
}

pub const HEADROOM: f64 = 2.0;

pub const CAPS: Caps = Caps {
    schema_version: 1,
    r_eta5: 1.6683680285153252e-1,
    r_gap: 1.2810282285249375e0,
    r_vert: 1.989548414584165e-2,
    r_eta10: 5.92379642195495e0,
    r_int10: 3.987034008466333e0,
    grad_profile: 6.529263116242293e0,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapViolation {
    pub id: String,
    pub ratio: &'static str,
    pub value: f64,
    pub cap: f64,
}

impl Caps {
    fn values(r: &InequalityRecord) -> [(&'static str, f64); 6] {
        [
            ("r_eta5", r.r_eta5),
            ("r_gap", r.r_gap),
            ("r_vert", r.r_vert),
            ("r_eta10", r.r_eta10),
            ("r_int10", r.r_int10),
            ("grad_profile", r.grad_profile),
        ]
    }

    fn caps(&self) -> [f64; 6] {
        [self.r_eta5, self.r_gap, self.r_vert, self.r_eta10, self.r_int10, self.grad_profile]
    }

    /// `headroom` times the largest value of every ratio.
    pub fn from_records(records: &[InequalityRecord], headroom: f64) -> Caps {
        let mut m = [0.0f64; 6];
        for r in records {
            for (k, (_, v)) in Self::values(r).iter().enumerate() {
                m[k] = m[k].max(*v);
            }
        }
        Caps {
            schema_version: SCHEMA_VERSION,
            r_eta5: headroom * m[0],
            r_gap: headroom * m[1],
            r_vert: headroom * m[2],
            r_eta10: headroom * m[3],
            r_int10: headroom * m[4],
            grad_profile: headroom * m[5],
        }
    }

    /// Ratios above their cap; NaN counts as a violation.
    pub fn violations(&self, r: &InequalityRecord) -> Vec<CapViolation> {
        Self::values(r)
            .iter()
            .zip(self.caps())
            .filter(|((_, v), cap)| !(v <= cap))
            .map(|(&(ratio, value), cap)| CapViolation { id: r.id.clone(), ratio, value, cap })
            .collect()
    }

    /// Rust source for the `CAPS` constant.
    pub fn to_source(&self) -> String {
        let lit = |v: f64| format!("{v:e}");
        format!(
            "pub const CAPS: Caps = Caps {{\n    schema_version: {},\n    r_eta5: {},\n    r_gap: {},\n    \
             r_vert: {},\n    r_eta10: {},\n    r_int10: {},\n    grad_profile: {},\n}};\n",
            self.schema_version,
            lit(self.r_eta5),
            lit(self.r_gap),
            lit(self.r_vert),
            lit(self.r_eta10),
            lit(self.r_int10),
            lit(self.grad_profile)
        )
    }
}
