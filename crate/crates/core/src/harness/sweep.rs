use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::family::{generate_family, Domain, FamilySpec};
use super::fit::fit_constant;
use super::pipeline::{run_domain, Settings};
use super::record::{write_records_csv, InequalityRecord, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFailure {
    pub id: String,
    pub family: String,
    pub eps: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub schema_version: u32,
    pub records: Vec<InequalityRecord>,
    pub failures: Vec<DomainFailure>,
}

/// Runs every domain of every family in parallel. A failing domain becomes
/// a `DomainFailure`; records and failures come out sorted by id.
pub fn run_sweep(specs: &[FamilySpec]) -> Result<SweepOutcome> {
    let mut jobs = Vec::new();
    for spec in specs {
        let settings = Settings::at_level(spec.refinement);
        for dom in generate_family(spec)? {
            jobs.push((dom, settings));
        }
    }
    Ok(run_domains(&jobs))
}

pub fn run_domains(jobs: &[(Domain, Settings)]) -> SweepOutcome {
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(dom, settings)| (dom, run_domain(dom, settings).map(|o| o.record)))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (dom, res) in results {
        match res {
            Ok(r) => records.push(r),
            Err(e) => failures.push(DomainFailure {
                id: dom.id.clone(),
                family: dom.kind.name().to_string(),
                eps: dom.eps,
                error: e.to_string(),
            }),
        }
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    SweepOutcome { schema_version: SCHEMA_VERSION, records, failures }
}

/// `run_sweep`, then `records.csv`, `records.json` and `summary.txt` in
/// `out_dir`. Fails only when no domain succeeded.
pub fn sweep(specs: &[FamilySpec], out_dir: &Path) -> Result<SweepOutcome> {
    let out = run_sweep(specs)?;
    out.write_all(out_dir)?;
    if out.records.is_empty() {
        return Err(Error::SweepFailed(out.failures.len()));
    }
    Ok(out)
}

impl SweepOutcome {
    pub fn write_all(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        write_records_csv(&self.records, BufWriter::new(File::create(out_dir.join("records.csv"))?))?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(out_dir.join("records.json"))?), self)?;
        std::fs::write(out_dir.join("summary.txt"), self.summary())?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "domains: {} ok, {} failed", self.records.len(), self.failures.len());
        if let Ok(fit) = fit_constant(&self.records) {
            let _ = writeln!(s, "c_min = {:.6} ({})", fit.c_min, fit.argmin);
            for f in &fit.per_family {
                let _ = writeln!(s, "  {:<18} c_min = {:.6} ({}, {} records)", f.family, f.c_min, f.argmin, f.count);
            }
        }
        let worst = |get: fn(&InequalityRecord) -> f64| self.records.iter().map(get).fold(f64::NEG_INFINITY, f64::max);
        if !self.records.is_empty() {
            let _ = writeln!(s, "min slack = {:.3e}", -worst(|r| -r.slack));
            let _ = writeln!(s, "min eta margin = {:.3e}", -worst(|r| -r.eta_margin()));
            let _ = writeln!(s, "max identity residual = {:.3e}", worst(|r| r.identity_residual));
            let _ = writeln!(s, "max li_yau = {:.4}", worst(|r| r.li_yau));
        }
        for f in &self.failures {
            let _ = writeln!(s, "FAILED {}: {}", f.id, f.error);
        }
        s
    }
}
