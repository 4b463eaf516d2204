//! Regenerates the frozen ratio caps.
//!
//! Sweeps the standard suite at refinement level 1 (or the level given as
//! the first argument), prints the summary, then the `CAPS` constant to
//! paste into `harness/caps.rs`.

use std::time::Instant;

use eigenwidth::harness::caps::{Caps, HEADROOM};
use eigenwidth::harness::{run_sweep, SweepConfig};

fn main() -> anyhow::Result<()> {
    let level: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let mut cfg = SweepConfig::standard();
    for f in &mut cfg.family {
        f.refinement = level;
    }
    let t = Instant::now();
    let out = run_sweep(&cfg.family)?;
    eprintln!("level {level}: {:.1} s", t.elapsed().as_secs_f64());
    eprint!("{}", out.summary());
    for r in &out.records {
        eprintln!(
            "{:<28} nodes {:>7} c_hat {:>9.5} id_res {:.2e} eta5 {:.3} gap {:.3} vert {:.3e} eta10 {:.3} int10 {:.3} grad {:.3} liyau {:.3}",
            r.id, r.nodes, r.c_hat, r.identity_residual, r.r_eta5, r.r_gap, r.r_vert, r.r_eta10, r.r_int10,
            r.grad_profile, r.li_yau
        );
    }
    if !out.failures.is_empty() {
        anyhow::bail!("{} domains failed", out.failures.len());
    }
    print!("{}", Caps::from_records(&out.records, HEADROOM).to_source());
    Ok(())
}
