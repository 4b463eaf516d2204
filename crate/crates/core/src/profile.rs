//! The height function `h(x)` of a w-framed domain and its boundary graphs.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::ConvexPolygon;

/// Sampled weight `h` on `[0, d]`, linear between samples.
///
/// For polygon-derived profiles the grid contains every vertex abscissa, so
/// the piecewise-linear interpretation is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub d: f64,
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    pub h_minus: Vec<f64>,
    pub h_plus: Vec<f64>,
    /// Ambient dimension `n`; `h^(1/(n-1))` is concave for slices of convex
    /// bodies.
    pub dim: u32,
    /// True once `h` was modified without updating `h_minus`/`h_plus`.
    pub boundary_stale: bool,
}

impl HeightProfile {
    /// Builds a profile from samples. `h_minus` defaults to zero and
    /// `h_plus` to `h` when omitted.
    pub fn from_samples(grid: Vec<f64>, h: Vec<f64>, dim: u32) -> Result<Self> {
        let h_plus = h.clone();
        let h_minus = vec![0.0; h.len()];
        Self::with_boundary(grid, h, h_minus, h_plus, dim)
    }

    pub fn with_boundary(
        grid: Vec<f64>,
        h: Vec<f64>,
        h_minus: Vec<f64>,
        h_plus: Vec<f64>,
        dim: u32,
    ) -> Result<Self> {
        let m = grid.len();
        if m < 2 {
            return Err(Error::invalid("profile needs at least two samples"));
        }
        if h.len() != m || h_minus.len() != m || h_plus.len() != m {
            return Err(Error::invalid("profile columns have different lengths"));
        }
        if dim < 2 {
            return Err(Error::invalid("dimension must be at least 2"));
        }
        if grid[0] != 0.0 {
            return Err(Error::invalid(format!("profile grid must start at 0, got {}", grid[0])));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("profile grid must be strictly increasing"));
        }
        let hmax = h.iter().cloned().fold(0.0, f64::max);
        if h.iter().any(|v| !v.is_finite() || *v < -1e-14 * hmax.max(1.0)) {
            return Err(Error::invalid("h must be finite and nonnegative"));
        }
        let d = grid[m - 1];
        Ok(HeightProfile {
            d,
            grid,
            h: h.into_iter().map(|v| v.max(0.0)).collect(),
            h_minus,
            h_plus,
            dim,
            boundary_stale: false,
        })
    }

    /// Samples a synthetic weight on `samples + 1` uniform points.
    pub fn from_fn(d: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = samples.max(1);
        let grid: Vec<f64> = (0..=samples).map(|i| d * i as f64 / samples as f64).collect();
        let h = grid.iter().map(|&x| f(x)).collect();
        Self::from_samples(grid, h, 2)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Index `i` of the interval `[grid[i], grid[i+1]]` containing `x`;
    /// points on a node belong to the interval on their right, except `d`.
    pub fn interval_index(&self, x: f64) -> usize {
        let m = self.grid.len();
        self.grid.partition_point(|&g| g <= x).saturating_sub(1).min(m - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        interp(&self.grid, &self.h, x)
    }

    pub fn eval_minus(&self, x: f64) -> f64 {
        interp(&self.grid, &self.h_minus, x)
    }

    pub fn eval_plus(&self, x: f64) -> f64 {
        interp(&self.grid, &self.h_plus, x)
    }

    /// Slope of `h` on interval `i`.
    pub fn slope(&self, i: usize) -> f64 {
        (self.h[i + 1] - self.h[i]) / (self.grid[i + 1] - self.grid[i])
    }

    /// One-sided derivative of `h` at `x` (right-sided; left-sided at `d`).
    pub fn slope_at(&self, x: f64) -> f64 {
        self.slope(self.interval_index(x))
    }

    pub fn max_h(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    /// Leftmost maximizer of `h`.
    pub fn tau0(&self) -> f64 {
        let hmax = self.max_h();
        let i = self.h.iter().position(|&v| v == hmax).unwrap_or(0);
        self.grid[i]
    }

    /// `int_0^d h dx` (exact for the piecewise-linear interpretation).
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.h.windows(2))
            .map(|(g, h)| 0.5 * (g[1] - g[0]) * (h[0] + h[1]))
            .sum()
    }

    /// Whether `h` vanishes (relative to its maximum) at either end.
    pub fn degenerate_ends(&self) -> (bool, bool) {
        let tol = 1e-14 * self.max_h();
        (self.h[0] <= tol, self.h[self.len() - 1] <= tol)
    }

    /// Largest second divided difference of `h^(1/(n-1))`; nonpositive
    /// (up to rounding) for concave profiles.
    pub fn concavity_defect(&self) -> f64 {
        let p = 1.0 / (self.dim as f64 - 1.0);
        let g: Vec<f64> = self.h.iter().map(|v| v.powf(p)).collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 1..self.len() - 1 {
            let s0 = (g[i] - g[i - 1]) / (self.grid[i] - self.grid[i - 1]);
            let s1 = (g[i + 1] - g[i]) / (self.grid[i + 1] - self.grid[i]);
            let dd = 2.0 * (s1 - s0) / (self.grid[i + 1] - self.grid[i - 1]);
            worst = worst.max(dd);
        }
        worst
    }

    /// Reflects `x -> d - x`.
    pub fn mirrored(&self) -> HeightProfile {
        let rev = |v: &[f64]| v.iter().rev().cloned().collect::<Vec<_>>();
        HeightProfile {
            d: self.d,
            grid: self.grid.iter().rev().map(|x| self.d - x).collect(),
            h: rev(&self.h),
            h_minus: rev(&self.h_minus),
            h_plus: rev(&self.h_plus),
            dim: self.dim,
            boundary_stale: self.boundary_stale,
        }
    }

    /// `h` multiplied by `c > 0`; used for scale-invariance checks.
    pub fn scaled(&self, c: f64) -> HeightProfile {
        HeightProfile {
            h: self.h.iter().map(|v| v * c).collect(),
            h_minus: self.h_minus.iter().map(|v| v * c).collect(),
            h_plus: self.h_plus.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "h", "h_minus", "h_plus"])?;
        for i in 0..self.len() {
            wtr.write_record(&[
                fmt_f64(self.grid[i]),
                fmt_f64(self.h[i]),
                fmt_f64(self.h_minus[i]),
                fmt_f64(self.h_plus[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let (mut x, mut h, mut hm, mut hp) = (vec![], vec![], vec![], vec![]);
        for (line, rec) in rdr.deserialize::<ProfileRow>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { line: line + 2, msg: e.to_string() })?;
            x.push(rec.x);
            h.push(rec.h);
            hm.push(rec.h_minus.unwrap_or(0.0));
            hp.push(rec.h_plus.unwrap_or(rec.h));
        }
        Self::with_boundary(x, h, hm, hp, 2)
    }
}

#[derive(Deserialize)]
struct ProfileRow {
    x: f64,
    h: f64,
    h_minus: Option<f64>,
    h_plus: Option<f64>,
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Linear interpolation on a strictly increasing grid, clamped at the ends.
pub fn interp(grid: &[f64], vals: &[f64], x: f64) -> f64 {
    let m = grid.len();
    if x <= grid[0] {
        return vals[0];
    }
    if x >= grid[m - 1] {
        return vals[m - 1];
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    if x == grid[i] {
        return vals[i];
    }
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    vals[i] + t * (vals[i + 1] - vals[i])
}

/// Merges `extra` into the sorted `base` points, dropping extras that fall
/// within `tol` of a base point.
pub(crate) fn merge_grid(base: &[f64], extra: &[f64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = base.to_vec();
    for &x in extra {
        let i = base.partition_point(|&b| b < x);
        let near_left = i > 0 && (x - base[i - 1]).abs() <= tol;
        let near_right = i < base.len() && (base[i] - x).abs() <= tol;
        if !near_left && !near_right {
            out.push(x);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Profile of a w-framed polygon on its vertex abscissas refined by a
/// uniform grid of `extra_samples` intervals.
pub fn build_profile(poly: &ConvexPolygon, extra_samples: usize) -> Result<HeightProfile> {
    poly.check_w_aligned()?;
    let chains = poly.chains();
    let mut breaks = chains.breakpoints();
    let d = *breaks.last().expect("polygon has vertices");
    breaks[0] = 0.0;
    let uniform: Vec<f64> = (1..extra_samples).map(|i| d * i as f64 / extra_samples as f64).collect();
    let grid = merge_grid(&breaks, &uniform, 1e-12 * d);
    let mut h = Vec::with_capacity(grid.len());
    let mut hm = Vec::with_capacity(grid.len());
    let mut hp = Vec::with_capacity(grid.len());
    for &x in &grid {
        let (lo, hi) = chains.chord(x);
        hm.push(lo);
        hp.push(hi);
        h.push(hi - lo);
    }
    HeightProfile::with_boundary(grid, h, hm, hp, 2)
}

/// `max over intervals of ||h'| - (|h_+'| + |h_-'|)| / (1 + |h'|)` with
/// one-sided slopes per interval. Vanishes exactly in the w-frame.
pub fn derivative_identity_residual(profile: &HeightProfile) -> Result<f64> {
    if profile.boundary_stale {
        return Err(Error::invalid("boundary graphs are stale (profile was regularized)"));
    }
    let mut worst: f64 = 0.0;
    for i in 0..profile.len() - 1 {
        let dx = profile.grid[i + 1] - profile.grid[i];
        let s = (profile.h[i + 1] - profile.h[i]) / dx;
        let sp = (profile.h_plus[i + 1] - profile.h_plus[i]) / dx;
        let sm = (profile.h_minus[i + 1] - profile.h_minus[i]) / dx;
        worst = worst.max((s.abs() - (sp.abs() + sm.abs())).abs() / (1.0 + s.abs()));
    }
    Ok(worst)
}

/// `h_k = (h^(1/(n-1)) + 1/k)^(n-1)` sample-wise. The boundary graphs are
/// kept but flagged stale.
pub fn regularize(profile: &HeightProfile, k: u64) -> Result<HeightProfile> {
    if k == 0 {
        return Err(Error::OutOfRange { what: "k", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    Ok(regularize_with(profile, 1.0 / k as f64, 1.0))
}

/// Regularization applied to `h / scale` and scaled back, i.e. with shift
/// `1/k` measured relative to `scale`.
pub(crate) fn regularize_with(profile: &HeightProfile, shift: f64, scale: f64) -> HeightProfile {
    let n1 = profile.dim as f64 - 1.0;
    let h = profile
        .h
        .iter()
        .map(|&v| {
            if profile.dim == 2 {
                v + shift * scale
            } else {
                scale * ((v / scale).powf(1.0 / n1) + shift).powf(n1)
            }
        })
        .collect();
    HeightProfile { h, boundary_stale: true, ..profile.clone() }
}

/// The norm `min{x, d - x}` on `[0, d]`.
pub fn norm_x(x: f64, d: f64) -> Result<f64> {
    if !(x >= 0.0 && x <= d) {
        return Err(Error::OutOfRange { what: "x", value: x, lo: 0.0, hi: d });
    }
    Ok(x.min(d - x))
}

/// [`norm_x`] without the range check, for quadrature nodes.
pub(crate) fn dist_to_ends(x: f64, d: f64) -> f64 {
    x.min(d - x).max(0.0)
}
