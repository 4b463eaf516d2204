//! Liouville transformation `w = sqrt(h) zeta'` of the weighted problem into
//! a Dirichlet Schrödinger problem `-w'' + V w = mu w` on `[0, d]`.
//!
//! `zeta'` is constant on every Galerkin element, so `w` is sampled at the
//! element midpoints and interpolated linearly on the dual grid
//! `0, m_0, .., m_{N-1}, d` with `w = 0` at both ends. For a piecewise-linear
//! `h` the potential splits into the smooth part `(3/4)(h'/h)^2` and point
//! masses `-[h']/(2h)` at the kinks.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::WeightedEigenSolution;
use crate::profile::{dist_to_ends, HeightProfile};

const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332_0, 0.118_463_442_528_094_5),
];

/// `int_a^b f` by 5-point Gauss-Legendre.
fn gauss5(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let len = b - a;
    GAUSS5.iter().map(|&(t, w)| w * f(a + t * len)).sum::<f64>() * len
}

#[derive(Debug, Clone, Serialize)]
pub struct LiouvilleData {
    pub d: f64,
    /// Dual grid `0, midpoints, d`.
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    /// Smooth potential `(3/4)(h'/h)^2` at the interior dual nodes
    /// (`grid[1..len-1]`); the ends are excluded since `V` may blow up there.
    pub potential: Vec<f64>,
    /// Kink locations and the weights `-[h']/(2h)` of their point masses.
    pub kink_x: Vec<f64>,
    pub kink_weight: Vec<f64>,
    /// `int (w')^2`.
    pub grad_energy: f64,
    /// `int (3/4)(h'/h)^2 w^2`, equal to `int (3/4)(h'^2/h)(zeta')^2`.
    pub smooth_energy: f64,
    /// Sum of kink point masses times `w^2`.
    pub kink_energy: f64,
    /// `int w^2`, equal to `int h (zeta')^2`.
    pub norm2: f64,
    pub mu1n: f64,
    /// `|dirichlet_rayleigh - mu1N| / mu1N`.
    pub mu_identity_residual: f64,
    /// Lengths `[0, m_0]` and `[m_{N-1}, d]` left to linear interpolation.
    pub truncation: (f64, f64),
}

impl LiouvilleData {
    /// Kink contribution to the Rayleigh quotient, i.e. what dropping the
    /// `-h''/(2h)` term would remove.
    pub fn dropped_kink_mass(&self) -> f64 {
        self.kink_energy / self.norm2
    }

    /// `pi^2/d^2 + T_zeta / int h (zeta')^2`.
    pub fn lower_bound(&self) -> f64 {
        PI * PI / (self.d * self.d) + self.smooth_energy / self.norm2
    }

    pub fn interp_w(&self, x: f64) -> f64 {
        crate::profile::interp(&self.grid, &self.w, x)
    }
}

pub fn transform(profile: &HeightProfile, sol: &WeightedEigenSolution) -> Result<LiouvilleData> {
    let g = &sol.grid;
    let n = g.len() - 1;
    let d = profile.d;
    let z = sol.zeta_or_phi();
    let h_nodes: Vec<f64> = g.iter().map(|&x| profile.eval(x)).collect();
    if h_nodes[1..n].iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("h vanishes at an interior sample"));
    }

    let mut grid = Vec::with_capacity(n + 2);
    let mut w = Vec::with_capacity(n + 2);
    grid.push(0.0);
    w.push(0.0);
    for e in 0..n {
        let m = 0.5 * (g[e] + g[e + 1]);
        let slope = (z[e + 1] - z[e]) / (g[e + 1] - g[e]);
        grid.push(m);
        w.push((0.5 * (h_nodes[e] + h_nodes[e + 1])).sqrt() * slope);
    }
    grid.push(d);
    w.push(0.0);

    let mut grad_energy = 0.0;
    let mut norm2 = 0.0;
    let mut smooth_energy = 0.0;
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (wa, wb) = (w[i], w[i + 1]);
        let len = b - a;
        grad_energy += (wb - wa).powi(2) / len;
        norm2 += len * (wa * wa + wa * wb + wb * wb) / 3.0;
        let wl = |x: f64| wa + (wb - wa) * (x - a) / len;
        // the primal node inside this dual element splits h into two lines
        let mut cuts = vec![a];
        if i > 0 && i < n {
            cuts.push(g[i]);
        }
        cuts.push(b);
        for c in cuts.windows(2) {
            let (ha, hb) = (profile.eval(c[0]), profile.eval(c[1]));
            let s = (hb - ha) / (c[1] - c[0]);
            if s == 0.0 {
                continue;
            }
            smooth_energy += gauss5(c[0], c[1], |x| {
                let h = ha + s * (x - c[0]);
                0.75 * (s / h).powi(2) * wl(x).powi(2)
            });
        }
    }

    let mut kink_x = Vec::new();
    let mut kink_weight = Vec::new();
    let mut kink_energy = 0.0;
    for j in 1..n {
        let s0 = (h_nodes[j] - h_nodes[j - 1]) / (g[j] - g[j - 1]);
        let s1 = (h_nodes[j + 1] - h_nodes[j]) / (g[j + 1] - g[j]);
        let jump = s1 - s0;
        if jump == 0.0 {
            continue;
        }
        let weight = -jump / (2.0 * h_nodes[j]);
        let wj = crate::profile::interp(&grid, &w, g[j]);
        kink_x.push(g[j]);
        kink_weight.push(weight);
        kink_energy += weight * wj * wj;
    }

    let potential = grid[1..=n]
        .iter()
        .map(|&m| {
            let i = profile.interval_index(m);
            let s = profile.slope(i);
            0.75 * (s / profile.eval(m)).powi(2)
        })
        .collect();

    let mut data = LiouvilleData {
        d,
        truncation: (grid[1], d - grid[n]),
        grid,
        w,
        potential,
        kink_x,
        kink_weight,
        grad_energy,
        smooth_energy,
        kink_energy,
        norm2,
        mu1n: sol.mu1n,
        mu_identity_residual: f64::NAN,
    };
    let rq = dirichlet_rayleigh(&data)?;
    data.mu_identity_residual = (rq - sol.mu1n).abs() / sol.mu1n;
    Ok(data)
}

/// `(int (w')^2 + V w^2) / int w^2`, with the kink point masses included.
pub fn dirichlet_rayleigh(data: &LiouvilleData) -> Result<f64> {
    if !(data.norm2 > 0.0) {
        return Err(Error::invalid("w vanishes identically"));
    }
    Ok((data.grad_energy + data.smooth_energy + data.kink_energy) / data.norm2)
}

/// The same quotient with the kink masses dropped; a lower bound for the
/// full quotient when `h` is concave.
pub fn dirichlet_rayleigh_smooth(data: &LiouvilleData) -> Result<f64> {
    if !(data.norm2 > 0.0) {
        return Err(Error::invalid("w vanishes identically"));
    }
    Ok((data.grad_energy + data.smooth_energy) / data.norm2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecondTerm {
    /// `int_A (h'^2/h) ||x||^2` with `A = [0, 1e-2] U [d - 1e-2, d]`.
    pub t_a: f64,
    /// The same integrand over `[0, d]`.
    pub t_full: f64,
    /// The same integrand over `[0, 1e-1]`.
    pub t_tenth: f64,
    /// `int (3/4)(h'^2/h)(zeta')^2`.
    pub t_zeta: f64,
    /// `int h (zeta')^2`.
    pub h_dzeta2: f64,
}

/// `int_lo^hi (h'^2/h) ||x||^2 dx`, split at every kink of `h` and at `d/2`.
pub fn t_integral(profile: &HeightProfile, lo: f64, hi: f64) -> Result<f64> {
    let d = profile.d;
    let (lo, hi) = (lo.max(0.0), hi.min(d));
    if hi <= lo {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..profile.len() - 1 {
        let (ga, gb) = (profile.grid[i], profile.grid[i + 1]);
        let (a, b) = (ga.max(lo), gb.min(hi));
        if b <= a {
            continue;
        }
        let s = profile.slope(i);
        if s == 0.0 {
            continue;
        }
        let (ha, hb) = (profile.h[i], profile.h[i + 1]);
        let interior_zero = (ha <= 0.0 && ga > 0.0) || (hb <= 0.0 && gb < d);
        if interior_zero {
            return Err(Error::invalid("h vanishes inside (0, d)"));
        }
        let h = |x: f64| ha + s * (x - ga);
        let mut cuts = vec![a];
        if a < 0.5 * d && 0.5 * d < b {
            cuts.push(0.5 * d);
        }
        cuts.push(b);
        for c in cuts.windows(2) {
            total += gauss5(c[0], c[1], |x| {
                let hx = h(x);
                if hx > 0.0 {
                    s * s / hx * dist_to_ends(x, d).powi(2)
                } else {
                    0.0
                }
            });
        }
    }
    Ok(total)
}

pub fn second_term(profile: &HeightProfile, sol: &WeightedEigenSolution) -> Result<SecondTerm> {
    let d = profile.d;
    if profile.h[1..profile.len() - 1].iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("h vanishes inside (0, d)"));
    }
    let a = 1e-2f64.min(0.5 * d);
    let t_a = t_integral(profile, 0.0, a)? + t_integral(profile, d - a, d)?;
    let t_full = t_integral(profile, 0.0, d)?;
    let t_tenth = t_integral(profile, 0.0, 0.1)?;
    let data = transform(profile, sol)?;
    Ok(SecondTerm { t_a, t_full, t_tenth, t_zeta: data.smooth_energy, h_dzeta2: data.norm2 })
}
