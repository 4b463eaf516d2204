use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::record::InequalityRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMin {
    pub family: String,
    pub c_min: f64,
    pub argmin: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Smallest `slack / eps^2` over all records.
    pub c_min: f64,
    pub argmin: String,
    pub per_family: Vec<FamilyMin>,
    pub n_records: usize,
    /// Records with `eps <= 0.05`.
    pub thin_records: usize,
}

/// Empirical constant of `mu1 >= pi^2/4 + C eps^2`. Ties go to the
/// smaller id.
pub fn fit_constant(records: &[InequalityRecord]) -> Result<FitReport> {
    let mut families: BTreeMap<&str, FamilyMin> = BTreeMap::new();
    let mut best: Option<&InequalityRecord> = None;
    for r in records {
        if best.is_none_or(|b| better(r, b)) {
            best = Some(r);
        }
        let e = families.entry(&r.family).or_insert_with(|| FamilyMin {
            family: r.family.clone(),
            c_min: r.c_hat,
            argmin: r.id.clone(),
            count: 0,
        });
        e.count += 1;
        if r.c_hat < e.c_min || (r.c_hat == e.c_min && r.id < e.argmin) {
            e.c_min = r.c_hat;
            e.argmin = r.id.clone();
        }
    }
    let best = best.ok_or_else(|| Error::invalid("no records to fit"))?;
    Ok(FitReport {
        c_min: best.c_hat,
        argmin: best.id.clone(),
        per_family: families.into_values().collect(),
        n_records: records.len(),
        thin_records: records.iter().filter(|r| r.eps <= 0.05).count(),
    })
}

fn better(r: &InequalityRecord, b: &InequalityRecord) -> bool {
    r.c_hat < b.c_hat || (r.c_hat == b.c_hat && r.id < b.id)
}
