//! The weighted Neumann problem `-(h phi')' = mu h phi` on `[0, d]`.
//!
//! Galerkin with continuous piecewise-linear elements on a grid that refines
//! the profile grid, so `h` is linear on every element and 2-point Gauss
//! quadrature is exact for both forms. A shooting method on the first-order
//! system `(phi, h phi')` serves as an independent cross-check.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, EigenOptions};
use crate::profile::{self, HeightProfile};

/// Regularization parameters used when `h` vanishes at an end.
pub const REGULARIZATION_KS: [u64; 3] = [100, 1_000, 10_000];

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

#[derive(Debug, Clone, Serialize)]
pub struct RegularizationInfo {
    pub ks: Vec<u64>,
    pub mus: Vec<f64>,
    /// Quadratic extrapolation of `mu(k)` to `1/k = 0`.
    pub extrapolated: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedEigenSolution {
    pub mu1n: f64,
    pub grid: Vec<f64>,
    /// Nodal values with `phi(0) = -1`.
    pub phi: Vec<f64>,
    /// `-u(0) * phi` once a bridge value is attached.
    pub zeta: Option<Vec<f64>>,
    pub x0: f64,
    /// `||K phi - mu M phi|| / ||M phi||`.
    pub residual: f64,
    pub regularization: Option<RegularizationInfo>,
}

impl WeightedEigenSolution {
    /// Attaches `zeta = -utilde0 * phi`, so that `zeta(0) = utilde0`.
    pub fn with_bridge_value(mut self, utilde0: f64) -> Self {
        self.zeta = Some(self.phi.iter().map(|p| -utilde0 * p).collect());
        self
    }

    /// `zeta` when present, otherwise `phi`.
    pub fn zeta_or_phi(&self) -> &[f64] {
        self.zeta.as_deref().unwrap_or(&self.phi)
    }

    pub fn eval_phi(&self, x: f64) -> f64 {
        profile::interp(&self.grid, &self.phi, x)
    }

    pub fn element_slopes(&self, f: &[f64]) -> Vec<f64> {
        self.grid
            .windows(2)
            .zip(f.windows(2))
            .map(|(g, v)| (v[1] - v[0]) / (g[1] - g[0]))
            .collect()
    }

    pub fn write_phi_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "phi"])?;
        for (x, p) in self.grid.iter().zip(&self.phi) {
            wtr.write_record(&[profile::fmt_f64(*x), profile::fmt_f64(*p)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A continuous piecewise-linear test function.
#[derive(Debug, Clone)]
pub struct SampledFn {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayleighValue {
    pub value: f64,
    /// The input had nonzero weighted mean and was projected first.
    pub projected: bool,
}

/// Element-wise integrals of `h f'^2`, `h f^2` and `h f` for a function that
/// is linear on every element of `grid`, where `h` is too.
struct WeightedForms {
    stiff: f64,
    mass: f64,
    mean: f64,
    weight: f64,
}

fn weighted_forms(profile: &HeightProfile, grid: &[f64], f: &[f64]) -> WeightedForms {
    let mut out = WeightedForms { stiff: 0.0, mass: 0.0, mean: 0.0, weight: 0.0 };
    for e in 0..grid.len() - 1 {
        let (a, b) = (grid[e], grid[e + 1]);
        let len = b - a;
        let (ha, hb) = (profile.eval(a), profile.eval(b));
        let slope = (f[e + 1] - f[e]) / len;
        out.stiff += 0.5 * (ha + hb) * len * slope * slope;
        out.weight += 0.5 * (ha + hb) * len;
        for &q in &GAUSS2 {
            let h = ha + q * (hb - ha);
            let v = f[e] + q * (f[e + 1] - f[e]);
            out.mass += 0.5 * len * h * v * v;
            out.mean += 0.5 * len * h * v;
        }
    }
    out
}

/// `int h f'^2 / int h f^2`, after projecting out the weighted mean.
pub fn rayleigh_quotient(profile: &HeightProfile, f: &SampledFn) -> Result<RayleighValue> {
    if f.grid.len() != f.values.len() || f.grid.len() < 2 {
        return Err(Error::invalid("test function grid and values differ in length"));
    }
    let grid = profile::merge_grid(&profile.grid, &f.grid, 0.0);
    let vals: Vec<f64> = grid.iter().map(|&x| profile::interp(&f.grid, &f.values, x)).collect();
    let forms = weighted_forms(profile, &grid, &vals);
    let fmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = forms.mean / forms.weight;
    let projected = c.abs() > 1e-12 * fmax;
    let forms = if projected {
        let shifted: Vec<f64> = vals.iter().map(|v| v - c).collect();
        weighted_forms(profile, &grid, &shifted)
    } else {
        forms
    };
    if !(forms.mass > 0.0) {
        return Err(Error::DegenerateTestFunction);
    }
    Ok(RayleighValue { value: forms.stiff / forms.mass, projected })
}

/// Galerkin grid: the profile grid refined by a uniform partition.
fn galerkin_grid(profile: &HeightProfile, n_elements: usize) -> Vec<f64> {
    let d = profile.d;
    let uniform: Vec<f64> = (1..n_elements).map(|i| d * i as f64 / n_elements as f64).collect();
    profile::merge_grid(&profile.grid, &uniform, 1e-9 * d / n_elements as f64)
}

struct Galerkin {
    grid: Vec<f64>,
    mu: f64,
    phi: Vec<f64>,
    residual: f64,
}

fn galerkin_solve(profile: &HeightProfile, n_elements: usize) -> Result<Galerkin> {
    let grid = galerkin_grid(profile, n_elements);
    let n = grid.len();
    let mut kt = Vec::with_capacity(4 * n);
    let mut mt = Vec::with_capacity(4 * n);
    for e in 0..n - 1 {
        let (a, b) = (grid[e], grid[e + 1]);
        let len = b - a;
        let (ha, hb) = (profile.eval(a), profile.eval(b));
        let kk = 0.5 * (ha + hb) / len;
        let mut me = [[0.0; 2]; 2];
        for &q in &GAUSS2 {
            let h = ha + q * (hb - ha);
            let basis = [1.0 - q, q];
            for i in 0..2 {
                for j in 0..2 {
                    me[i][j] += 0.5 * len * h * basis[i] * basis[j];
                }
            }
        }
        let idx = [e, e + 1];
        for i in 0..2 {
            for j in 0..2 {
                let sign = if i == j { 1.0 } else { -1.0 };
                kt.push((idx[i], idx[j], sign * kk));
                mt.push((idx[i], idx[j], me[i][j]));
            }
        }
    }
    let k = linalg::assemble(n, &kt);
    let m = linalg::assemble(n, &mt);
    let d = profile.d;
    let start: Vec<Vec<f64>> = vec![
        grid.iter().map(|x| (PI * x / d).sin()).collect(),
        grid.iter().map(|x| (PI * x / d).cos()).collect(),
        grid.iter().map(|x| (2.0 * PI * x / d).cos()).collect(),
        grid.iter().map(|x| x / d).collect(),
        grid.iter().map(|x| (x / d).powi(2)).collect(),
        grid.iter().map(|x| (x / d).powi(3)).collect(),
    ];
    let opts = EigenOptions { shift: 1.0 / (d * d), ..EigenOptions::default() };
    let ones = vec![1.0; n];
    let pair = linalg::smallest_deflated(&k, &m, &ones, start, &opts)?;
    let s = pair.vector[0];
    if !(s.abs() > 1e-300) {
        return Err(Error::Linalg("eigenfunction vanishes at x = 0".into()));
    }
    let phi: Vec<f64> = pair.vector.iter().map(|v| -v / s).collect();
    Ok(Galerkin { grid, mu: pair.value, phi, residual: pair.residual })
}

fn first_zero(grid: &[f64], f: &[f64]) -> f64 {
    for i in 0..f.len() - 1 {
        if f[i] <= 0.0 && f[i + 1] > 0.0 {
            let t = -f[i] / (f[i + 1] - f[i]);
            return grid[i] + t * (grid[i + 1] - grid[i]);
        }
    }
    f64::NAN
}

/// Lagrange extrapolation to `t = 0` through the points `(t_i, y_i)`.
pub(crate) fn extrapolate_to_zero(ts: &[f64], ys: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..ts.len() {
        let mut w = 1.0;
        for j in 0..ts.len() {
            if i != j {
                w *= (0.0 - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// First nonzero eigenpair of the weighted Neumann problem.
///
/// The returned eigenpair is the Galerkin solution for `h` itself. When `h`
/// vanishes at an end the problem is additionally solved for the
/// regularized weights `h + max(h)/k`, `k` in [`REGULARIZATION_KS`]; the
/// sequence must be monotone and is extrapolated to `1/k = 0` as a check.
pub fn solve_weighted_neumann(profile: &HeightProfile, n_elements: usize) -> Result<WeightedEigenSolution> {
    if n_elements < 16 {
        return Err(Error::OutOfRange {
            what: "n_elements",
            value: n_elements as f64,
            lo: 16.0,
            hi: f64::INFINITY,
        });
    }
    let hmax = profile.max_h();
    if !(hmax > 0.0) {
        return Err(Error::ZeroWeight);
    }
    if profile.h[1..profile.len() - 1].iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid("h must be positive on the open interval"));
    }
    let sol = galerkin_solve(profile, n_elements)?;

    let (left, right) = profile.degenerate_ends();
    let regularization = if left || right {
        let mut mus = Vec::with_capacity(REGULARIZATION_KS.len());
        for &k in &REGULARIZATION_KS {
            let reg = profile::regularize_with(profile, 1.0 / k as f64, hmax);
            mus.push(galerkin_solve(&reg, n_elements)?.mu);
        }
        let diffs: Vec<f64> = mus.windows(2).map(|w| w[1] - w[0]).collect();
        let tol = 1e-12 * mus[0].abs();
        let up = diffs.iter().all(|&v| v >= -tol);
        let down = diffs.iter().all(|&v| v <= tol);
        if !(up || down) {
            return Err(Error::Regularization(format!("mu(k) is not monotone: {mus:?}")));
        }
        let ts: Vec<f64> = REGULARIZATION_KS.iter().map(|&k| 1.0 / k as f64).collect();
        Some(RegularizationInfo {
            ks: REGULARIZATION_KS.to_vec(),
            extrapolated: extrapolate_to_zero(&ts, &mus),
            mus,
        })
    } else {
        None
    };

    let x0 = first_zero(&sol.grid, &sol.phi);
    Ok(WeightedEigenSolution {
        mu1n: sol.mu,
        grid: sol.grid,
        phi: sol.phi,
        zeta: None,
        x0,
        residual: sol.residual,
        regularization,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootingResult {
    pub mu: f64,
    /// Truncation width at each degenerate end.
    pub delta: f64,
}

const SHOOT_LO: f64 = PI * PI / 8.0;
const SHOOT_HI: f64 = 50.0;

/// Integrates `phi' = p/h`, `p' = -mu h phi` from `phi = -1, p = 0` and
/// returns `p` at the right end.
fn shoot(profile: &HeightProfile, mu: f64, delta: f64) -> f64 {
    let (left, right) = profile.degenerate_ends();
    let d = profile.d;
    let x_start = if left { delta } else { 0.0 };
    let x_end = if right { d - delta } else { d };
    let max_step = d / 4000.0;
    let (mut phi, mut p) = (-1.0, 0.0);
    let mut x = x_start;
    let mut i = profile.interval_index(x);
    while x < x_end {
        let g1 = profile.grid[i + 1].min(x_end);
        let s = profile.slope(i);
        let (g0, h0) = (profile.grid[i], profile.h[i]);
        let h = |t: f64| h0 + s * (t - g0);
        while x < g1 {
            let mut step = max_step;
            if s != 0.0 {
                step = step.min(0.05 * h(x) / s.abs()).min(0.05 * h(x + step.min(g1 - x)) / s.abs());
            }
            step = step.min(g1 - x);
            if g1 - x - step < 1e-3 * step {
                step = g1 - x;
            }
            let f = |t: f64, ph: f64, pp: f64| (pp / h(t), -mu * h(t) * ph);
            let (k1a, k1b) = f(x, phi, p);
            let (k2a, k2b) = f(x + 0.5 * step, phi + 0.5 * step * k1a, p + 0.5 * step * k1b);
            let (k3a, k3b) = f(x + 0.5 * step, phi + 0.5 * step * k2a, p + 0.5 * step * k2b);
            let (k4a, k4b) = f(x + step, phi + step * k3a, p + step * k3b);
            phi += step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            p += step / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
            x = if g1 - x <= step { g1 } else { x + step };
        }
        if i + 2 < profile.len() {
            i += 1;
        } else {
            break;
        }
    }
    p
}

/// Shooting-method eigenvalue: the smallest `mu` in `[pi^2/8, 50]` with
/// `h phi'` vanishing at the right end. Degenerate ends are truncated by
/// `1e-6 d`.
pub fn shooting_cross_check(profile: &HeightProfile) -> Result<ShootingResult> {
    let (left, right) = profile.degenerate_ends();
    let delta = if left || right { 1e-6 * profile.d } else { 0.0 };
    if profile.h[1..profile.len() - 1].iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid("h must be positive on the open interval"));
    }
    let f = |mu: f64| shoot(profile, mu, delta);
    let mut lo = SHOOT_LO;
    let mut flo = f(lo);
    if !(flo > 0.0) {
        return Err(Error::Bracketing { lo: SHOOT_LO, hi: SHOOT_HI });
    }
    let step = 0.25;
    let mut hi = lo;
    loop {
        hi += step;
        if hi > SHOOT_HI {
            return Err(Error::Bracketing { lo: SHOOT_LO, hi: SHOOT_HI });
        }
        if f(hi) <= 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        let fm = f(mid);
        if fm > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let _ = flo;
    Ok(ShootingResult { mu: 0.5 * (lo + hi), delta })
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    /// Smallest element slope of `phi`; should be `>= -1e-8`.
    pub min_slope: f64,
    /// Range of `phi'(x) / ||x||` over element midpoints with `||x|| <= 1e-2`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Largest `phi'(x) / ||x||` over the whole interval.
    pub ratio_max_global: f64,
    pub x0: f64,
    pub x0_in_range: bool,
    pub sup_phi: f64,
}

/// Slope, zero-location and sup-norm checks on `phi`.
pub fn verify_gradient_bounds(sol: &WeightedEigenSolution, profile: &HeightProfile) -> GradientReport {
    let d = profile.d;
    let slopes = sol.element_slopes(&sol.phi);
    let mut r = GradientReport {
        min_slope: slopes.iter().cloned().fold(f64::INFINITY, f64::min),
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        ratio_max_global: 0.0,
        x0: sol.x0,
        x0_in_range: sol.x0 >= 1e-2 && sol.x0 <= d - 1e-2,
        sup_phi: sol.phi.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    for (e, s) in slopes.iter().enumerate() {
        let mid = 0.5 * (sol.grid[e] + sol.grid[e + 1]);
        let nx = profile::dist_to_ends(mid, d);
        if nx <= 0.0 {
            continue;
        }
        let ratio = s / nx;
        r.ratio_max_global = r.ratio_max_global.max(ratio);
        if nx <= 1e-2 {
            r.ratio_min = r.ratio_min.min(ratio);
            r.ratio_max = r.ratio_max.max(ratio);
        }
    }
    r
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct L2Report {
    pub int_h_phi2: f64,
    pub int_h_dphi2: f64,
    /// `int h phi^2 / V`.
    pub r1: f64,
    /// `int h phi'^2 / V`.
    pub r2: f64,
    /// `|r2 - mu r1| / (mu r1)`.
    pub identity_residual: f64,
}

/// Weighted L2 norms of `phi` and `phi'` relative to `V = int h`.
pub fn l2_bounds(sol: &WeightedEigenSolution, profile: &HeightProfile) -> L2Report {
    let grid = profile::merge_grid(&sol.grid, &profile.grid, 0.0);
    let vals: Vec<f64> = grid.iter().map(|&x| sol.eval_phi(x)).collect();
    let forms = weighted_forms(profile, &grid, &vals);
    let v = profile.integral();
    let r1 = forms.mass / v;
    let r2 = forms.stiff / v;
    L2Report {
        int_h_phi2: forms.mass,
        int_h_dphi2: forms.stiff,
        r1,
        r2,
        identity_residual: (r2 - sol.mu1n * r1).abs() / (sol.mu1n * r1),
    }
}
