use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::family::{FamilyKind, FamilySpec};

/// Widths of the standard suite.
pub const SUITE_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Sweep configuration, one `[[family]]` table per family:
///
/// ```toml
/// [[family]]
/// kind = "random_convex"
/// eps = [0.1, 0.05]
/// seed = 7
/// refinement = 0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Vec<FamilySpec>,
}

impl SweepConfig {
    /// Rectangles, isoceles triangles and hex lenses at the suite widths.
    pub fn standard() -> Self {
        let family = [FamilyKind::Rectangle, FamilyKind::IsocelesTriangle, FamilyKind::HexLens]
            .into_iter()
            .map(|k| FamilySpec::new(k, &SUITE_EPS))
            .collect();
        SweepConfig { family }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.is_empty() {
            return Err(Error::invalid("config lists no family"));
        }
        self.family.iter().try_for_each(FamilySpec::validate)
    }
}
