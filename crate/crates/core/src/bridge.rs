//! From the planar eigenfunction to the weighted ODE.
//!
//! The eigenfunction `u` of a w-framed mesh is averaged over vertical
//! chords, clamped near the ends and recentred (`ubar -> uhat -> utilde`),
//! and compared with the ODE eigenfunction. Sampled functions on the bridge
//! grid are treated as piecewise linear, and every `h`-weighted integral is
//! evaluated exactly for that representation (Gauss rules split at the
//! profile kinks). Only the derivative inside `eta` uses central
//! differences, so the eigenvalue identity residual measures exactly the gap
//! between that derivative and the piecewise-linear slopes.
//!
//! The chord average of a P1 function has a kink at every mesh node, so its
//! slope jumps on the mesh scale. Differences are therefore taken with a
//! stride whose half-width spans the widest triangle twice over.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::MeshSolution;
use crate::liouville::t_integral;
use crate::ode::WeightedEigenSolution;
use crate::profile::{interp, HeightProfile};

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `int_a^b f(x, h(x))`, exact for `f` polynomial of degree <= 5 in `x`
/// on every linear piece of `h`.
fn int_h(profile: &HeightProfile, a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let g = &profile.grid;
    let i0 = g.partition_point(|&x| x <= a);
    let i1 = g.partition_point(|&x| x < b);
    let mut s = 0.0;
    let mut lo = a;
    for &k in g[i0..i1].iter().chain(std::iter::once(&b)) {
        let len = k - lo;
        if len > 0.0 {
            for &(t, w) in &GAUSS3 {
                let x = lo + t * len;
                s += w * len * f(x, profile.eval(x));
            }
        }
        lo = k;
    }
    s
}

/// Sample grid on `[0, d]`: uniform pieces on `[0, eps]`, `[eps, d - eps]`
/// and `[d - eps, d]`, so `eps` and `d - eps` are nodes and the middle part
/// carries a uniform subgrid for central differences.
#[derive(Debug, Clone, Serialize)]
pub struct SampleGrid {
    pub x: Vec<f64>,
    pub eps: f64,
    /// Indices of `eps` and `d - eps`, absent when `eps >= d/2`.
    pub clamp: Option<(usize, usize)>,
}

impl SampleGrid {
    pub fn new(d: f64, eps: f64, n_samples: usize) -> Result<Self> {
        if n_samples < 64 {
            return Err(Error::OutOfRange { what: "n_samples", value: n_samples as f64, lo: 64.0, hi: f64::INFINITY });
        }
        if !(d > 0.0 && eps > 0.0) {
            return Err(Error::invalid("sample grid needs d > 0 and eps > 0"));
        }
        if 2.0 * eps >= d {
            let x = (0..=n_samples).map(|i| d * i as f64 / n_samples as f64).collect();
            return Ok(SampleGrid { x, eps, clamp: None });
        }
        let mid = d - 2.0 * eps;
        let n_end = ((n_samples as f64 * eps / mid).ceil() as usize).max(4);
        let mut x = Vec::with_capacity(n_samples + 2 * n_end + 1);
        for i in 0..n_end {
            x.push(eps * i as f64 / n_end as f64);
        }
        let lo = x.len();
        for i in 0..n_samples {
            x.push(eps + mid * i as f64 / n_samples as f64);
        }
        let hi = x.len();
        for i in 0..=n_end {
            x.push(d - eps + eps * i as f64 / n_end as f64);
        }
        *x.last_mut().unwrap() = d;
        Ok(SampleGrid { x, eps, clamp: Some((lo, hi)) })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Index range of `[eps, d - eps]`, or the whole grid if unclamped.
    pub fn inner(&self) -> std::ops::RangeInclusive<usize> {
        match self.clamp {
            Some((lo, hi)) => lo..=hi,
            None => 0..=self.x.len() - 1,
        }
    }

    /// Derivative of nodal values on `[eps, d - eps]`: the slope of the
    /// least-squares quadratic over the `2k + 1` nodes centred at each node,
    /// a central difference stencil on the uniform subgrid, with the window
    /// shifted inside the range near either end; zero outside. `k` is capped
    /// at a quarter of the range.
    pub fn derivative(&self, f: &[f64], k: usize) -> Vec<f64> {
        let x = &self.x;
        let mut out = vec![0.0; x.len()];
        let r = self.inner();
        let (lo, hi) = (*r.start(), *r.end());
        let k = k.clamp(1, ((hi - lo) / 4).max(1));
        for i in lo..=hi {
            out[i] = if i < lo + k {
                quadratic_slope(&x[lo..=lo + 2 * k], &f[lo..=lo + 2 * k], x[i])
            } else if i + k > hi {
                quadratic_slope(&x[hi - 2 * k..=hi], &f[hi - 2 * k..=hi], x[i])
            } else {
                quadratic_slope(&x[i - k..=i + k], &f[i - k..=i + k], x[i])
            };
        }
        out
    }

    /// Stride whose half-width covers twice the widest triangle of `sol`.
    pub fn stride_for(&self, sol: &MeshSolution) -> usize {
        let r = self.inner();
        let (lo, hi) = (*r.start(), *r.end());
        let dx = (self.x[hi] - self.x[lo]) / (hi - lo) as f64;
        (2.0 * max_extent(sol) / dx).ceil().max(1.0) as usize
    }
}

/// Slope at `at` of the least-squares quadratic through `(x, f)`.
fn quadratic_slope(x: &[f64], f: &[f64], at: f64) -> f64 {
    let c = 0.5 * (x[0] + x[x.len() - 1]);
    let s = 0.5 * (x[x.len() - 1] - x[0]);
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for (&xi, &fi) in x.iter().zip(f) {
        let t = (xi - c) / s;
        let v = nalgebra::Vector3::new(1.0, t, t * t);
        a += v * v.transpose();
        b += v * fi;
    }
    let coef = a.cholesky().map(|ch| ch.solve(&b)).unwrap_or_else(nalgebra::Vector3::zeros);
    (coef[1] + 2.0 * coef[2] * (at - c) / s) / s
}

fn max_extent(sol: &MeshSolution) -> f64 {
    let mesh = &sol.mesh;
    mesh.triangles
        .iter()
        .map(|tri| {
            let xs = tri.map(|v| mesh.nodes[v].x);
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// One triangle's share of a vertical chord.
#[derive(Debug, Clone, Copy)]
struct Segment {
    y0: f64,
    y1: f64,
    u0: f64,
    u1: f64,
    uy: f64,
}

fn chord_segments(sol: &MeshSolution, grid: &[f64]) -> Vec<Vec<Segment>> {
    let mesh = &sol.mesh;
    let (mx0, mx1) = mesh
        .nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let xs: Vec<f64> = grid.iter().map(|&x| x.clamp(mx0, mx1)).collect();
    let mut out: Vec<Vec<Segment>> = vec![Vec::new(); xs.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|v| mesh.nodes[v]);
        let u = tri.map(|v| sol.u[v]);
        let tx0 = p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
        let tx1 = p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
        // half-open [tx0, tx1): a chord along a shared vertical edge belongs
        // to the triangle on its right; the right end of the mesh is closed
        let i0 = xs.partition_point(|&x| x < tx0);
        let i1 = if tx1 >= mx1 { xs.partition_point(|&x| x <= tx1) } else { xs.partition_point(|&x| x < tx1) };
        if i0 >= i1 {
            continue;
        }
        let (_, uy) = sol.gradient(t);
        for (i, &x) in xs.iter().enumerate().take(i1).skip(i0) {
            let mut lo = (f64::INFINITY, 0.0);
            let mut hi = (f64::NEG_INFINITY, 0.0);
            let mut add = |y: f64, v: f64| {
                if y < lo.0 {
                    lo = (y, v);
                }
                if y > hi.0 {
                    hi = (y, v);
                }
            };
            for k in 0..3 {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                let (ua, ub) = (u[k], u[(k + 1) % 3]);
                if a.x == b.x {
                    if a.x == x {
                        add(a.y, ua);
                        add(b.y, ub);
                    }
                } else if (x - a.x) * (x - b.x) <= 0.0 {
                    let s = (x - a.x) / (b.x - a.x);
                    add(a.y + s * (b.y - a.y), ua + s * (ub - ua));
                }
            }
            if hi.0 > lo.0 {
                out[i].push(Segment { y0: lo.0, y1: hi.0, u0: lo.1, u1: hi.1, uy });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossSection {
    pub grid: SampleGrid,
    pub ubar: Vec<f64>,
    /// Profile heights at the samples.
    pub h: Vec<f64>,
    /// `u` at the bottom and top ends of each chord.
    pub u_bottom: Vec<f64>,
    pub u_top: Vec<f64>,
    /// Exact chord integrals `int (u - ubar)^2 dy` and `int u_y^2 dy`.
    pub chord_var: Vec<f64>,
    pub chord_ey: Vec<f64>,
    /// Samples whose chord was too short to average and were extrapolated.
    pub extrapolated: Vec<usize>,
}

impl CrossSection {
    /// Worst ratio of the slice Poincaré inequality
    /// `int (u - ubar)^2 <= (eps/pi)^2 int u_y^2`, over slices where the
    /// right side is not negligible.
    pub fn poincare_ratio(&self) -> f64 {
        let c = (self.grid.eps / PI).powi(2);
        self.chord_var
            .iter()
            .zip(&self.chord_ey)
            .filter(|(&v, &e)| v > 1e-14 || c * e > 1e-14)
            .map(|(&v, &e)| v / (c * e))
            .fold(0.0, f64::max)
    }
}

/// Chord averages `ubar(x) = (1/h) int u(x, y) dy` of a w-framed solution.
pub fn cross_sectional_average(sol: &MeshSolution, profile: &HeightProfile, n_samples: usize) -> Result<CrossSection> {
    let eps = profile.max_h();
    let grid = SampleGrid::new(profile.d, eps, n_samples)?;
    let segs = chord_segments(sol, &grid.x);
    let n = grid.len();
    let tol = 1e-8 * eps;
    let mut ubar = vec![f64::NAN; n];
    let mut h = vec![0.0; n];
    let mut u_bottom = vec![0.0; n];
    let mut u_top = vec![0.0; n];
    let mut chord_ey = vec![0.0; n];
    let mut chord_len = vec![0.0; n];
    let mut degenerate = Vec::new();
    for i in 0..n {
        let x = grid.x[i];
        h[i] = profile.eval(x);
        let len: f64 = segs[i].iter().map(|s| s.y1 - s.y0).sum();
        if (len - h[i]).abs() > tol {
            return Err(Error::Slicing {
                x,
                reason: format!("chord length {len:e} against profile height {:e}", h[i]),
            });
        }
        chord_len[i] = len;
        if let Some(s) = segs[i].iter().min_by(|a, b| a.y0.total_cmp(&b.y0)) {
            u_bottom[i] = s.u0;
        }
        if let Some(s) = segs[i].iter().max_by(|a, b| a.y1.total_cmp(&b.y1)) {
            u_top[i] = s.u1;
        }
        chord_ey[i] = segs[i].iter().map(|s| (s.y1 - s.y0) * s.uy * s.uy).sum();
        if len <= 1e-12 * eps {
            degenerate.push(i);
        } else {
            let int_u: f64 = segs[i].iter().map(|s| 0.5 * (s.y1 - s.y0) * (s.u0 + s.u1)).sum();
            ubar[i] = int_u / len;
        }
    }
    for &i in &degenerate {
        // linear extrapolation from the two nearest regular samples inward
        let (a, b) = if i < n / 2 {
            let a = (i + 1..n).find(|&j| !ubar[j].is_nan());
            (a, a.and_then(|a| (a + 1..n).find(|&j| !ubar[j].is_nan())))
        } else {
            let a = (0..i).rev().find(|&j| !ubar[j].is_nan());
            (a, a.and_then(|a| (0..a).rev().find(|&j| !ubar[j].is_nan())))
        };
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::Slicing { x: grid.x[i], reason: "no regular chords to extrapolate from".into() });
        };
        let (xa, xb) = (grid.x[a], grid.x[b]);
        ubar[i] = ubar[a] + (ubar[b] - ubar[a]) * (grid.x[i] - xa) / (xb - xa);
    }
    let chord_var = (0..n)
        .map(|i| {
            segs[i]
                .iter()
                .map(|s| {
                    let (a, b) = (s.u0 - ubar[i], s.u1 - ubar[i]);
                    (s.y1 - s.y0) * (a * a + a * b + b * b) / 3.0
                })
                .sum()
        })
        .collect();
    Ok(CrossSection { grid, ubar, h, u_bottom, u_top, chord_var, chord_ey, extrapolated: degenerate })
}

/// Fine samples per triangle x-extent used by `average_slope`.
const OVERSAMPLE: f64 = 8.0;

/// `ubar'` at the nodes of `[eps, d - eps]`, zero elsewhere: the slope of
/// the least-squares quadratic over the same window as
/// `SampleGrid::derivative` with stride `k`, fitted to chord averages on a
/// subgrid with at least `OVERSAMPLE` points per triangle x-extent.
/// Windows stay between consecutive kinks of `h`, where `ubar''` jumps; at
/// a kink the two one-sided slopes are averaged.
///
/// The chord average of a P1 function is piecewise linear between mesh
/// columns; sampled at a spacing comparable to the mesh, its interpolation
/// error aliases into the slope. Dense sampling averages it out.
pub fn average_slope(sol: &MeshSolution, profile: &HeightProfile, grid: &SampleGrid, k: usize) -> Vec<f64> {
    let r = grid.inner();
    let (lo, hi) = (*r.start(), *r.end());
    let n = hi - lo;
    let (a, b) = (grid.x[lo], grid.x[hi]);
    let dx = (b - a) / n as f64;
    let m = (OVERSAMPLE * dx / max_extent(sol)).ceil().max(1.0) as usize;
    let nf = n * m;
    let xf: Vec<f64> = (0..=nf).map(|j| if j == nf { b } else { a + (b - a) * j as f64 / nf as f64 }).collect();
    let segs = chord_segments(sol, &xf);
    let uf: Vec<f64> = segs
        .iter()
        .map(|ss| {
            let len: f64 = ss.iter().map(|s| s.y1 - s.y0).sum();
            let int_u: f64 = ss.iter().map(|s| 0.5 * (s.y1 - s.y0) * (s.u0 + s.u1)).sum();
            if len > 0.0 { int_u / len } else { f64::NAN }
        })
        .collect();
    let k = k.clamp(1, (n / 4).max(1));
    let w = k * m;
    // fine-grid index ranges between kinks
    let tol = 1e-8 * grid.eps;
    let mut cuts = vec![0usize];
    for q in 1..profile.len() - 1 {
        let xk = profile.grid[q];
        if xk > a && xk < b && (profile.slope(q) - profile.slope(q - 1)).abs() > tol {
            let c = ((xk - a) / (b - a) * nf as f64).round() as usize;
            if c > *cuts.last().unwrap() && c < nf {
                cuts.push(c);
            }
        }
    }
    cuts.push(nf);
    let fit = |j: usize, p0: usize, p1: usize, at: f64| {
        let w = w.min((p1 - p0) / 2).max(1);
        let start = j.saturating_sub(w).max(p0).min(p1.saturating_sub(2 * w)).max(p0);
        let end = (start + 2 * w).min(p1);
        let (xs, us): (Vec<f64>, Vec<f64>) =
            (start..=end).filter(|&q| uf[q].is_finite()).map(|q| (xf[q], uf[q])).unzip();
        quadratic_slope(&xs, &us, at)
    };
    let mut out = vec![0.0; grid.len()];
    for i in lo..=hi {
        let j = (i - lo) * m;
        let c = cuts.partition_point(|&c| c <= j);
        let (p0, p1) = (cuts[c - 1], cuts[c.min(cuts.len() - 1)]);
        out[i] = if j == nf {
            fit(j, cuts[cuts.len() - 2], nf, grid.x[i])
        } else if j == p0 && c >= 2 {
            0.5 * (fit(j, cuts[c - 2], p0, grid.x[i]) + fit(j, p0, p1, grid.x[i]))
        } else {
            fit(j, p0, p1, grid.x[i])
        };
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ModifiedAverage {
    pub uhat: Vec<f64>,
    pub utilde: Vec<f64>,
    pub c1: f64,
}

/// `int_0^d h f` for `f` piecewise linear on `x`.
fn weighted_integral(profile: &HeightProfile, x: &[f64], f: &[f64]) -> f64 {
    (0..x.len() - 1).map(|e| element_int(profile, x, f, e, |h, v| h * v)).sum()
}

/// `int_e g(h, f)` over element `e` with `f` linear on it.
fn element_int(profile: &HeightProfile, x: &[f64], f: &[f64], e: usize, g: impl Fn(f64, f64) -> f64) -> f64 {
    let (a, b) = (x[e], x[e + 1]);
    let s = (f[e + 1] - f[e]) / (b - a);
    int_h(profile, a, b, |t, h| g(h, f[e] + s * (t - a)))
}

/// Clamps `ubar` to `ubar(eps)` on `[0, eps]` and to `ubar(d - eps)` on
/// `[d - eps, d]`, then subtracts the weighted mean `c1`.
pub fn modify_average(grid: &SampleGrid, ubar: &[f64], profile: &HeightProfile) -> Result<ModifiedAverage> {
    let Some((lo, hi)) = grid.clamp else {
        return Err(Error::TooThick { eps: grid.eps, half_d: 0.5 * profile.d });
    };
    let mut uhat = ubar.to_vec();
    let (left, right) = (ubar[lo], ubar[hi]);
    uhat[..lo].fill(left);
    uhat[hi + 1..].fill(right);
    let c1 = weighted_integral(profile, &grid.x, &uhat) / profile.integral();
    let utilde = uhat.iter().map(|v| v - c1).collect();
    Ok(ModifiedAverage { uhat, utilde, c1 })
}

/// `eta = h g + m H` with `H(x) = int_0^x h utilde` exact and `g` a nodal
/// derivative. For the bridge `g` is the central-difference `utilde'` and
/// `m = mu1`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorTerm {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub m: f64,
    pub cumulative: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ErrorTerm {
    pub fn new(profile: &HeightProfile, x: &[f64], utilde: &[f64], g: Vec<f64>, m: f64) -> Self {
        let mut cumulative = vec![0.0; x.len()];
        for e in 0..x.len() - 1 {
            cumulative[e + 1] = cumulative[e] + element_int(profile, x, utilde, e, |h, v| h * v);
        }
        let eta = x
            .iter()
            .zip(&g)
            .zip(&cumulative)
            .map(|((&xi, &gi), &hi)| profile.eval(xi) * gi + m * hi)
            .collect();
        ErrorTerm { x: x.to_vec(), g, m, cumulative, eta }
    }

    /// `int_e H` for the exact cumulative integral, by exchanging the order
    /// of integration.
    fn element_cumulative(&self, profile: &HeightProfile, utilde: &[f64], e: usize) -> f64 {
        let (a, b) = (self.x[e], self.x[e + 1]);
        let s = (utilde[e + 1] - utilde[e]) / (b - a);
        (b - a) * self.cumulative[e] + int_h(profile, a, b, |t, h| (b - t) * h * (utilde[e] + s * (t - a)))
    }

    /// `int_e eta`.
    fn element_integral(&self, profile: &HeightProfile, utilde: &[f64], e: usize) -> f64 {
        let (a, b) = (self.x[e], self.x[e + 1]);
        let sg = (self.g[e + 1] - self.g[e]) / (b - a);
        let hg = int_h(profile, a, b, |t, h| h * (self.g[e] + sg * (t - a)));
        hg + self.m * self.element_cumulative(profile, utilde, e)
    }
}

/// `eta(x) = h utilde' + mu1 int_0^x h utilde` on the sample grid, with
/// `utilde'` by differences of stride `k`.
pub fn error_term(grid: &SampleGrid, utilde: &[f64], profile: &HeightProfile, mu1: f64, k: usize) -> ErrorTerm {
    ErrorTerm::new(profile, &grid.x, utilde, grid.derivative(utilde, k), mu1)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityTerms {
    /// `int h (utilde')^2`.
    pub energy: f64,
    /// `int eta utilde'`.
    pub eta_term: f64,
    /// `int h utilde^2`.
    pub mass: f64,
    /// `|mu1 - (energy - eta_term)/mass| / mu1`.
    pub residual: f64,
}

/// Residual of `mu1 = (int h (utilde')^2 - int eta utilde') / int h utilde^2`.
pub fn eigenvalue_identity_residual(
    profile: &HeightProfile,
    utilde: &[f64],
    eta: &ErrorTerm,
    mu1: f64,
) -> Result<IdentityTerms> {
    let x = &eta.x;
    let mut energy = 0.0;
    let mut eta_term = 0.0;
    let mut mass = 0.0;
    for e in 0..x.len() - 1 {
        let s = (utilde[e + 1] - utilde[e]) / (x[e + 1] - x[e]);
        mass += element_int(profile, x, utilde, e, |h, v| h * v * v);
        if s != 0.0 {
            energy += s * s * int_h(profile, x[e], x[e + 1], |_, h| h);
            eta_term += s * eta.element_integral(profile, utilde, e);
        }
    }
    if mass < 1e-14 {
        return Err(Error::DegenerateTestFunction);
    }
    let residual = (mu1 - (energy - eta_term) / mass).abs() / mu1;
    Ok(IdentityTerms { energy, eta_term, mass, residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct Gaps {
    /// ODE eigenfunction aligned by `zeta(0) = utilde(0)`, on the sample grid.
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    /// `sup |utilde - zeta|` over `[0, d]`.
    pub sup0: f64,
    /// `sup |utilde' - zeta'|` over `[eps, d - eps]`.
    pub sup1: f64,
    pub ratio0: f64,
    pub ratio1: f64,
}

/// Distance between `utilde` and the aligned ODE eigenfunction.
pub fn ode_pde_gap(grid: &SampleGrid, utilde: &[f64], ode: &WeightedEigenSolution, k: usize) -> Gaps {
    ode_pde_gap_with(grid, utilde, &grid.derivative(utilde, k), ode, k)
}

/// `ode_pde_gap` with the slope of `utilde` supplied on `[eps, d - eps]`.
pub fn ode_pde_gap_with(
    grid: &SampleGrid,
    utilde: &[f64],
    dutilde: &[f64],
    ode: &WeightedEigenSolution,
    k: usize,
) -> Gaps {
    let scale = -utilde[0];
    let zeta: Vec<f64> = match &ode.zeta {
        Some(z) => grid.x.iter().map(|&x| interp(&ode.grid, z, x)).collect(),
        None => grid.x.iter().map(|&x| scale * ode.eval_phi(x)).collect(),
    };
    let xi: Vec<f64> = utilde.iter().zip(&zeta).map(|(u, z)| u - z).collect();
    let sup0 = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dzeta = grid.derivative(&zeta, k);
    let sup1 = grid.inner().map(|i| (dutilde[i] - dzeta[i]).abs()).fold(0.0f64, f64::max);
    Gaps { zeta, xi, sup0, sup1, ratio0: sup0 / grid.eps, ratio1: sup1 / grid.eps }
}

/// `E_y = int |D_y u|^2` and `E_y / (eps V)`.
pub fn vertical_energy(sol: &MeshSolution, profile: &HeightProfile) -> (f64, f64) {
    let (_, ey) = sol.energies();
    (ey, ey / (profile.max_h() * sol.mesh.total_area()))
}

/// Vertical energy per unit length around each sample: triangles are
/// attributed to a window by their centroid, and the window half-width is at
/// least the largest triangle x-extent so every window sees whole columns.
fn slice_vertical_energy(sol: &MeshSolution, x: &[f64], d: f64) -> Vec<f64> {
    let mesh = &sol.mesh;
    let mut items: Vec<(f64, f64)> = (0..mesh.triangles.len())
        .map(|t| {
            let (_, gy) = sol.gradient(t);
            (mesh.centroid(t).x, mesh.area(t) * gy * gy)
        })
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = vec![0.0];
    for &(_, e) in &items {
        prefix.push(prefix.last().unwrap() + e);
    }
    let extent = max_extent(sol);
    let spacing = x.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let delta = extent.max(0.5 * spacing);
    x.iter()
        .map(|&xi| {
            let (a, b) = ((xi - delta).max(0.0), (xi + delta).min(d));
            let ia = items.partition_point(|it| it.0 < a);
            let ib = items.partition_point(|it| it.0 < b);
            (prefix[ib] - prefix[ia]) / (b - a)
        })
        .collect()
}

/// Slopes of the upper and lower boundary graphs at `x`.
fn edge_slopes(profile: &HeightProfile, x: f64) -> (f64, f64) {
    let i = profile.interval_index(x);
    let dx = profile.grid[i + 1] - profile.grid[i];
    (
        (profile.h_plus[i + 1] - profile.h_plus[i]) / dx,
        (profile.h_minus[i + 1] - profile.h_minus[i]) / dx,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ImprovedEta {
    /// `max |eta| / (|h'| sqrt(h) sqrt(E_slice) + h eps^3)` over
    /// `[eps, d - eps]`, with `|h'| = |h+'| + |h-'|`.
    pub r_eta10: f64,
    /// The same ratio for `etahat = h ubar' - int u_x dy`, without the
    /// `h eps^3` allowance. `etahat` is evaluated as
    /// `h+'(u+ - ubar) - h-'(u- - ubar)`, which is the same quantity by
    /// differentiating `int u dy` under moving ends, and needs no derivative
    /// of the samples.
    pub r_etahat10: f64,
    /// `int |eta utilde'| / (eps^{3/2} sqrt(V) sqrt(T) + V eps^3)` with
    /// `T = int |h'|^2 ||x||^2 / h`.
    pub r_int10: f64,
    pub t_full: f64,
}

pub fn improved_eta_report(
    sol: &MeshSolution,
    profile: &HeightProfile,
    cross: &CrossSection,
    utilde: &[f64],
    eta: &ErrorTerm,
) -> Result<ImprovedEta> {
    let grid = &cross.grid;
    let x = &grid.x;
    let eps = grid.eps;
    let v = sol.mesh.total_area();
    let e_slice = slice_vertical_energy(sol, x, profile.d);
    let mut r_eta10 = 0.0f64;
    let mut r_etahat10 = 0.0f64;
    for i in grid.inner() {
        let h = cross.h[i];
        let (sp, sm) = edge_slopes(profile, x[i]);
        let main = (sp.abs() + sm.abs()) * h.sqrt() * e_slice[i].sqrt();
        let num = eta.eta[i].abs();
        let den = main + h * eps.powi(3);
        if num >= 1e-14 || den >= 1e-14 {
            r_eta10 = r_eta10.max(num / den);
        }
        let etahat = (sp * (cross.u_top[i] - cross.ubar[i]) - sm * (cross.u_bottom[i] - cross.ubar[i])).abs();
        if etahat >= 1e-14 || main >= 1e-14 {
            r_etahat10 = r_etahat10.max(etahat / main);
        }
    }
    let mut int_abs = 0.0;
    for e in 0..x.len() - 1 {
        let len = x[e + 1] - x[e];
        let s = (utilde[e + 1] - utilde[e]) / len;
        int_abs += s.abs() * len * 0.5 * (eta.eta[e].abs() + eta.eta[e + 1].abs());
    }
    let t_full = t_integral(profile, 0.0, profile.d)?;
    let r_int10 = int_abs / (eps.powf(1.5) * v.sqrt() * t_full.sqrt() + v * eps.powi(3));
    Ok(ImprovedEta { r_eta10, r_etahat10, r_int10, t_full })
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub d: f64,
    pub eps: f64,
    pub mu1: f64,
    pub mu1n: f64,
    pub grid: Vec<f64>,
    pub ubar: Vec<f64>,
    pub uhat: Vec<f64>,
    pub utilde: Vec<f64>,
    pub c1: f64,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    pub gap0: f64,
    pub gap1: f64,
    pub identity: IdentityTerms,
    pub identity_residual: f64,
    /// `max |eta| / (h eps)` over `[eps, d - eps]`.
    pub r_eta5: f64,
    pub r_gap: f64,
    pub e_y: f64,
    pub r_vert: f64,
    pub r_eta10: f64,
    pub r_etahat10: f64,
    pub r_int10: f64,
    /// `int h utilde / V`, zero by construction.
    pub mean_defect: f64,
    /// `|H(d)|` scaled by `V`: the two-sided consistency of `eta` at `d - eps`.
    pub eta_end_defect: f64,
    pub poincare_ratio: f64,
}

impl BridgeReport {
    /// Rows `x, ubar, utilde, zeta, eta, xi`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "ubar", "utilde", "zeta", "eta", "xi"])?;
        for i in 0..self.grid.len() {
            let row = [self.grid[i], self.ubar[i], self.utilde[i], self.zeta[i], self.eta[i], self.xi[i]];
            wr.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Runs the whole bridge for a w-framed solution `sol` whose positive end
/// is on the right, with `ode` solved on the same profile.
pub fn bridge(
    sol: &MeshSolution,
    profile: &HeightProfile,
    ode: &WeightedEigenSolution,
    n_samples: usize,
) -> Result<BridgeReport> {
    let cross = cross_sectional_average(sol, profile, n_samples)?;
    let grid = &cross.grid;
    let m = modify_average(grid, &cross.ubar, profile)?;
    let k = grid.stride_for(sol);
    let slope = average_slope(sol, profile, grid, k);
    let et = ErrorTerm::new(profile, &grid.x, &m.utilde, slope.clone(), sol.mu1);
    let identity = eigenvalue_identity_residual(profile, &m.utilde, &et, sol.mu1)?;
    let gaps = ode_pde_gap_with(grid, &m.utilde, &slope, ode, k);
    let (e_y, r_vert) = vertical_energy(sol, profile);
    let imp = improved_eta_report(sol, profile, &cross, &m.utilde, &et)?;
    let eps = grid.eps;
    let v = sol.mesh.total_area();
    let r_eta5 = grid
        .inner()
        .filter(|&i| cross.h[i] > 0.0)
        .map(|i| et.eta[i].abs() / (cross.h[i] * eps))
        .fold(0.0, f64::max);
    let n = grid.len();
    Ok(BridgeReport {
        d: profile.d,
        eps,
        mu1: sol.mu1,
        mu1n: ode.mu1n,
        grid: grid.x.clone(),
        ubar: cross.ubar.clone(),
        uhat: m.uhat,
        c1: m.c1,
        eta: et.eta,
        zeta: gaps.zeta,
        xi: gaps.xi,
        gap0: gaps.sup0,
        gap1: gaps.sup1,
        identity,
        identity_residual: identity.residual,
        r_eta5,
        r_gap: (gaps.sup0 + gaps.sup1) / eps,
        e_y,
        r_vert,
        r_eta10: imp.r_eta10,
        r_etahat10: imp.r_etahat10,
        r_int10: imp.r_int10,
        mean_defect: weighted_integral(profile, &grid.x, &m.utilde).abs() / v,
        eta_end_defect: et.cumulative[n - 1].abs() / v,
        poincare_ratio: cross.poincare_ratio(),
        utilde: m.utilde,
    })
}
