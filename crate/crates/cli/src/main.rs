//! `eigenwidth` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or bad input, 2 solver failure, 3 a
//! `--check` assertion failed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eigenwidth::harness::{
    self, fit_constant, read_records_csv, sharpness_check, FamilyKind, FamilySpec, Framed, Settings, SweepConfig,
};
use eigenwidth::profile::HeightProfile;
use eigenwidth::{fem, io, liouville, ode, ConvexPolygon, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "eigenwidth", version, about = "First Neumann eigenvalue against the width of thin convex domains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Width, projective width, diameter and the w-frame of a polygon.
    Width { polygon: PathBuf },
    /// Height profile of the w-framed polygon as CSV.
    Profile {
        polygon: PathBuf,
        /// Extra samples between consecutive vertex abscissae.
        #[arg(long, default_value_t = 64)]
        extra: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Weighted Neumann eigenvalue of the height profile.
    Ode {
        /// Polygon file; ignored with --profile.
        polygon: Option<PathBuf>,
        /// Read the profile from CSV instead of a polygon.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 2048)]
        elements: usize,
        /// Write the eigenfunction as CSV.
        #[arg(long)]
        phi: Option<PathBuf>,
    },
    /// 2-D Neumann eigenvalue by P1 finite elements.
    Pde {
        polygon: PathBuf,
        /// Mesh size before refinement; defaults to min(eps/8, 0.02).
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
    /// Liouville transform of the regularized weighted problem.
    Liouville {
        polygon: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        k: u64,
        #[arg(long, default_value_t = 2048)]
        elements: usize,
    },
    /// Full pipeline on one polygon: the JSON record on stdout, sampled
    /// profiles in bridge.csv.
    Compare {
        polygon: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        refinement: u32,
    },
    /// Sweep domain families and write records.csv, records.json, summary.txt.
    Sweep(SweepArgs),
    /// Thin rectangles against separation of variables.
    Sharpness {
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        refinement: u32,
        #[arg(long)]
        check: bool,
    },
    /// Empirical constant from a records CSV.
    Fit {
        records: PathBuf,
        /// Fail unless c_min exceeds this.
        #[arg(long)]
        check: Option<f64>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with one [[family]] table per family; the standard suite
    /// when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the families of the config by a single family.
    #[arg(long)]
    kind: Option<FamilyKind>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    refinement: Option<u32>,
    #[arg(short, long, default_value = "sweep-out")]
    out: PathBuf,
    /// Exit with 3 if a domain failed or any record breaks an invariant.
    #[arg(long)]
    check: bool,
}

impl SweepArgs {
    fn families(&self) -> Result<Vec<FamilySpec>> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => SweepConfig::standard(),
        };
        if let Some(kind) = self.kind {
            let eps = self.eps.clone().unwrap_or_else(|| harness::SUITE_EPS.to_vec());
            cfg.family = vec![FamilySpec::new(kind, &eps)];
        }
        for f in &mut cfg.family {
            if let Some(e) = &self.eps {
                f.eps = e.clone();
            }
            if let Some(s) = self.seed {
                f.seed = s;
            }
            if let Some(r) = self.refinement {
                f.refinement = r;
            }
        }
        cfg.validate()?;
        Ok(cfg.family)
    }
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Bad input is a usage error; everything else failed inside a solver.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::Degenerate(_)
            | Error::NotConvex(_)
            | Error::TooThick { .. }
            | Error::OutOfRange { .. }
            | Error::Invalid(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Toml(_),
        ) => 1,
        Some(_) => 2,
        None if e.downcast_ref::<std::io::Error>().is_some() => 1,
        None => 2,
    }
}

fn read_poly(path: &Path) -> Result<ConvexPolygon> {
    Ok(io::read_polygon(path).with_context(|| format!("reading {}", path.display()))?)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(cmd: Cmd) -> Result<Status> {
    match cmd {
        Cmd::Width { polygon } => {
            let poly = read_poly(&polygon)?;
            let (w, dir) = poly.width();
            let (pw, _) = poly.projective_width();
            let (_, frame) = eigenwidth::geom::normalize_w_frame(&poly)?;
            print_json(&json!({
                "width": w,
                "projective_width": pw,
                "direction": dir,
                "diameter": poly.diameter(),
                "area": poly.area(),
                "frame": frame,
            }))?;
        }
        Cmd::Profile { polygon, extra, out } => {
            let (framed, _) = eigenwidth::geom::normalize_w_frame(&read_poly(&polygon)?)?;
            let p = eigenwidth::profile::build_profile(&framed, extra)?;
            match out {
                Some(path) => p.write_csv(create(&path)?)?,
                None => p.write_csv(std::io::stdout().lock())?,
            }
        }
        Cmd::Ode { polygon, profile, elements, phi } => {
            let p = match (profile, polygon) {
                (Some(csv), _) => HeightProfile::read_csv(File::open(&csv).with_context(|| csv.display().to_string())?)?,
                (None, Some(poly)) => Framed::new(&read_poly(&poly)?)?.profile,
                (None, None) => bail!(Error::Invalid("give a polygon or --profile".into())),
            };
            let sol = ode::solve_weighted_neumann(&p, elements)?;
            let shot = ode::shooting_cross_check(&p)?;
            let grad = ode::verify_gradient_bounds(&sol, &p);
            let l2 = ode::l2_bounds(&sol, &p);
            if let Some(path) = phi {
                sol.write_phi_csv(create(&path)?)?;
            }
            print_json(&json!({
                "d": p.d,
                "mu1n": sol.mu1n,
                "x0": sol.x0,
                "residual": sol.residual,
                "regularization": sol.regularization,
                "shooting": shot,
                "gradient": grad,
                "l2": l2,
            }))?;
        }
        Cmd::Pde { polygon, target, vtk } => {
            let mut framed = Framed::new(&read_poly(&polygon)?)?;
            let mut settings = Settings::default();
            if let Some(t) = target {
                settings.max_edge = t;
            }
            let pde = harness::pipeline::solve_pde(&mut framed, &settings)?;
            let sol = &pde.solution;
            if let Some(path) = vtk {
                sol.mesh.write_vtk(create(&path)?, Some(("u", &sol.u)))?;
            }
            print_json(&json!({
                "mu1": sol.mu1,
                "mu1_extrapolated": pde.mu_extrapolated,
                "level_mus": pde.level_mus,
                "rel_change": pde.rel_change,
                "converged": pde.converged,
                "nodes": sol.nodes,
                "backward_error": sol.backward_error,
                "k": sol.k,
                "mirrored": framed.frame.mirrored,
                "li_yau": fem::gradient_bound_check(sol),
            }))?;
        }
        Cmd::Liouville { polygon, k, elements } => {
            let p = Framed::new(&read_poly(&polygon)?)?.profile;
            let reg = eigenwidth::profile::regularize(&p, k)?;
            let sol = ode::solve_weighted_neumann(&reg, elements)?;
            let data = liouville::transform(&reg, &sol)?;
            let second = liouville::second_term(&reg, &sol)?;
            print_json(&json!({
                "mu1n": sol.mu1n,
                "dirichlet_rayleigh": liouville::dirichlet_rayleigh(&data)?,
                "identity_residual": data.mu_identity_residual,
                "lower_bound": data.lower_bound(),
                "dropped_kink_mass": data.dropped_kink_mass(),
                "second_term": second,
            }))?;
        }
        Cmd::Compare { polygon, out_dir, refinement } => {
            let poly = read_poly(&polygon)?;
            let eps = poly.width().0;
            let id = polygon.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let o = harness::run_polygon(&id, "file", eps, &poly, &Settings::at_level(refinement))?;
            std::fs::create_dir_all(&out_dir)?;
            o.bridge.write_csv(create(&out_dir.join("bridge.csv"))?)?;
            print_json(&o.record)?;
        }
        Cmd::Sweep(args) => {
            let families = args.families()?;
            let out = harness::run_sweep(&families)?;
            out.write_all(&args.out)?;
            print!("{}", out.summary());
            if out.records.is_empty() {
                return Err(Error::SweepFailed(out.failures.len()).into());
            }
            if args.check {
                let mut bad = !out.failures.is_empty();
                for r in &out.records {
                    for v in r.violations() {
                        println!("CHECK {}: {v}", r.id);
                        bad = true;
                    }
                }
                if bad {
                    return Ok(Status::CheckFailed);
                }
            }
        }
        Cmd::Sharpness { eps, refinement, check } => {
            let t = sharpness_check(&eps, &Settings::at_level(refinement))?;
            print!("{}", t.to_text());
            println!("slack/eps^2 decreasing with eps: {}", t.monotone);
            if check && !t.all_pass() {
                return Ok(Status::CheckFailed);
            }
        }
        Cmd::Fit { records, check } => {
            let recs = read_records_csv(File::open(&records).with_context(|| records.display().to_string())?)?;
            let fit = fit_constant(&recs)?;
            print_json(&fit)?;
            if let Some(min) = check {
                if !(fit.c_min > min) {
                    eprintln!("c_min = {} is not above {min}", fit.c_min);
                    return Ok(Status::CheckFailed);
                }
            }
        }
    }
    Ok(Status::Ok)
}
