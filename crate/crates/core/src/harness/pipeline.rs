use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bridge::{self, BridgeReport};
use crate::error::Result;
use crate::fem::{self, ConvergedSolution, SolveOptions};
use crate::geom::{normalize_w_frame, ConvexPolygon, WFrame};
use crate::liouville::{self, LiouvilleData};
use crate::ode::{self, ShootingResult, WeightedEigenSolution};
use crate::profile::{build_profile, regularize, HeightProfile};

use super::family::Domain;
use super::record::{InequalityRecord, SCHEMA_VERSION};

/// Extra profile samples between polygon vertices.
const PROFILE_EXTRA: usize = 64;
/// Bins of the directional gradient profile.
const GRADIENT_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub refinement: u32,
    /// Mesh size before refinement is `min(eps / 8, max_edge)`.
    pub max_edge: f64,
    pub ode_elements: usize,
    pub bridge_samples: usize,
    /// Regularization parameter of the Liouville check.
    pub liouville_k: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { refinement: 0, max_edge: 0.02, ode_elements: 2048, bridge_samples: 1024, liouville_k: 10_000 }
    }
}

impl Settings {
    pub fn at_level(refinement: u32) -> Self {
        let f = 1usize << refinement;
        let base = Settings::default();
        Settings {
            refinement,
            ode_elements: base.ode_elements * f,
            bridge_samples: base.bridge_samples * f,
            ..base
        }
    }

    pub fn target_edge(&self, eps: f64) -> f64 {
        (eps / 8.0).min(self.max_edge) / f64::from(1u32 << self.refinement)
    }
}

/// A polygon in w-frame position with its height profile.
#[derive(Debug, Clone)]
pub struct Framed {
    pub polygon: ConvexPolygon,
    pub frame: WFrame,
    pub profile: HeightProfile,
}

impl Framed {
    pub fn new(poly: &ConvexPolygon) -> Result<Framed> {
        let (polygon, frame) = normalize_w_frame(poly)?;
        let profile = build_profile(&polygon, PROFILE_EXTRA)?;
        Ok(Framed { polygon, frame, profile })
    }

    fn mirror(&mut self) {
        let d = self.profile.d;
        self.polygon = self.polygon.mirror_x(d);
        self.profile = self.profile.mirrored();
        self.frame.mirrored = !self.frame.mirrored;
    }
}

/// Converged 2-D solve on the framed polygon. The domain is mirrored when
/// needed so that the positive end of the eigenfunction is on the right.
pub fn solve_pde(framed: &mut Framed, settings: &Settings) -> Result<ConvergedSolution> {
    let opts = SolveOptions::new(settings.target_edge(framed.frame.eps));
    let mut pde = fem::solve_converged(&framed.polygon, &opts)?;
    if pde.solution.mean_right_of(0.5 * framed.profile.d) < 0.0 {
        pde.solution = pde.solution.mirror_x(framed.profile.d);
        framed.mirror();
    }
    Ok(pde)
}

#[derive(Debug, Clone)]
pub struct DomainOutcome {
    pub framed: Framed,
    pub pde: ConvergedSolution,
    pub ode: WeightedEigenSolution,
    pub shooting: ShootingResult,
    /// Liouville data of the regularized weight.
    pub liouville: LiouvilleData,
    pub mu1n_reg: f64,
    pub bridge: BridgeReport,
    pub record: InequalityRecord,
}

pub fn run_domain(domain: &Domain, settings: &Settings) -> Result<DomainOutcome> {
    run_polygon(&domain.id, domain.kind.name(), domain.eps, &domain.polygon, settings)
}

/// normalize, profile, pde, ode, liouville, bridge.
pub fn run_polygon(
    id: &str,
    family: &str,
    eps_target: f64,
    poly: &ConvexPolygon,
    settings: &Settings,
) -> Result<DomainOutcome> {
    let mut framed = Framed::new(poly)?;
    let pde = solve_pde(&mut framed, settings)?;
    let profile = &framed.profile;
    let ode = ode::solve_weighted_neumann(profile, settings.ode_elements)?;
    let shooting = ode::shooting_cross_check(profile)?;
    let reg = regularize(profile, settings.liouville_k)?;
    let reg_sol = ode::solve_weighted_neumann(&reg, settings.ode_elements)?;
    let liouville = liouville::transform(&reg, &reg_sol)?;
    let bridge = bridge::bridge(&pde.solution, profile, &ode, settings.bridge_samples)?;

    let sol = &pde.solution;
    let eps = framed.frame.eps;
    let mu1 = sol.mu1;
    let slack = mu1 - PI * PI / 4.0;
    let li_yau = fem::gradient_bound_check(sol);
    let dp = fem::directional_profile(sol, profile, GRADIENT_BINS);
    let record = InequalityRecord {
        schema_version: SCHEMA_VERSION,
        id: id.to_string(),
        family: family.to_string(),
        eps_target,
        d: profile.d,
        eps,
        mirrored: framed.frame.mirrored,
        mesh_edge: settings.target_edge(eps) / f64::from(1u32 << (pde.level_mus.len() - 1)),
        nodes: sol.nodes,
        fem_rel_change: pde.rel_change,
        fem_converged: pde.converged,
        mu1,
        mu1_extrapolated: pde.mu_extrapolated,
        mu1n: ode.mu1n,
        shooting_rel: (shooting.mu - ode.mu1n).abs() / ode.mu1n,
        slack,
        c_hat: slack / (eps * eps),
        gap_ode: mu1 - ode.mu1n,
        eta_correction: bridge.identity.eta_term.abs() / bridge.identity.mass,
        identity_residual: bridge.identity_residual,
        r_eta5: bridge.r_eta5,
        r_gap: bridge.r_gap,
        r_vert: bridge.r_vert,
        r_eta10: bridge.r_eta10,
        r_etahat10: bridge.r_etahat10,
        r_int10: bridge.r_int10,
        poincare_ratio: bridge.poincare_ratio,
        li_yau: li_yau.max_ratio,
        grad_profile: dp.max_ratio,
        grad_end: dp.end_ratio,
        mu1n_reg: reg_sol.mu1n,
        liouville_residual: liouville.mu_identity_residual,
        liouville_lower: liouville.lower_bound(),
    };
    Ok(DomainOutcome { mu1n_reg: reg_sol.mu1n, framed, pde, ode, shooting, liouville, bridge, record })
}
