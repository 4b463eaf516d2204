use rayon::prelude::*;
use serde::Serialize;
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::fem::mesh::{refine, triangulate_with, Mesh, MeshOptions};
use crate::geom::ConvexPolygon;
use crate::linalg::{self, EigenOptions};
use crate::profile::{dist_to_ends, HeightProfile};

/// P1 stiffness and consistent mass matrices.
pub fn assemble(mesh: &Mesh) -> (CsMat<f64>, CsMat<f64>) {
    // element matrices in parallel, accumulated in triangle order so the
    // result does not depend on scheduling
    let local: Vec<([[f64; 3]; 3], f64)> = mesh
        .triangles
        .par_iter()
        .map(|&[a, b, c]| {
            let p = [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]];
            let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
            // gradient of the hat at vertex i is the rotated opposite edge
            let g: Vec<(f64, f64)> = (0..3)
                .map(|i| {
                    let e = p[(i + 2) % 3] - p[(i + 1) % 3];
                    (-e.y / (2.0 * area), e.x / (2.0 * area))
                })
                .collect();
            let mut ke = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    ke[i][j] = area * (g[i].0 * g[j].0 + g[i].1 * g[j].1);
                }
            }
            (ke, area)
        })
        .collect();
    let n = mesh.nodes.len();
    let mut kt = Vec::with_capacity(9 * local.len());
    let mut mt = Vec::with_capacity(9 * local.len());
    for (tri, (ke, area)) in mesh.triangles.iter().zip(&local) {
        for i in 0..3 {
            for j in 0..3 {
                kt.push((tri[i], tri[j], ke[i][j]));
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                mt.push((tri[i], tri[j], m));
            }
        }
    }
    (linalg::assemble(n, &kt), linalg::assemble(n, &mt))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSolution {
    #[serde(skip)]
    pub mesh: Mesh,
    pub mu1: f64,
    /// Nodal values with `max u = 1` and `min u = -k`.
    pub u: Vec<f64>,
    pub k: f64,
    /// `||K u - mu M u|| / ||M u||`.
    pub residual: f64,
    pub backward_error: f64,
    pub iterations: usize,
    /// Mass-weighted mean of `u`.
    pub mean: f64,
    pub nodes: usize,
}

/// First nonconstant Neumann eigenpair of `-Laplace` on the mesh.
pub fn solve_neumann_eig(mesh: &Mesh) -> Result<MeshSolution> {
    solve_neumann_eig_with(mesh, &EigenOptions::default())
}

pub fn solve_neumann_eig_with(mesh: &Mesh, eig: &EigenOptions) -> Result<MeshSolution> {
    let n = mesh.nodes.len();
    if n < 3 || mesh.triangles.is_empty() {
        return Err(Error::invalid("mesh has no triangles"));
    }
    let (k, m) = assemble(mesh);
    let (mut lo, mut hi) = (mesh.nodes[0], mesh.nodes[0]);
    for p in &mesh.nodes {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let diag = (hi - lo).norm();
    let sx: Vec<f64> = mesh.nodes.iter().map(|p| (p.x - lo.x) / diag).collect();
    let sy: Vec<f64> = mesh.nodes.iter().map(|p| (p.y - lo.y) / diag).collect();
    let start = vec![
        sx.clone(),
        sy.clone(),
        sx.iter().map(|x| x * x).collect(),
        sx.iter().zip(&sy).map(|(x, y)| x * y).collect(),
        sy.iter().map(|y| y * y).collect(),
        sx.iter().map(|x| x * x * x).collect(),
    ];
    let opts = EigenOptions { shift: eig.shift / (diag * diag), ..*eig };
    let ones = vec![1.0; n];
    let pair = linalg::smallest_deflated(&k, &m, &ones, start, &opts)?;

    let mx = pair.vector.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = pair.vector.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = if mx >= -mn { mx } else { mn };
    let u: Vec<f64> = pair.vector.iter().map(|v| v / scale).collect();
    let k_val = -u.iter().cloned().fold(f64::INFINITY, f64::min);
    let m1 = linalg::matvec(&m, &ones);
    let mean = linalg::dot(&m1, &u) / linalg::dot(&m1, &ones);
    Ok(MeshSolution {
        mesh: mesh.clone(),
        mu1: pair.value,
        u,
        k: k_val,
        residual: pair.residual,
        backward_error: pair.backward_error,
        iterations: pair.iterations,
        mean,
        nodes: n,
    })
}

impl MeshSolution {
    /// Reflection `x -> d - x` of the mesh; the eigenpair is unchanged.
    pub fn mirror_x(&self, d: f64) -> MeshSolution {
        MeshSolution { mesh: self.mesh.mirror_x(d), ..self.clone() }
    }

    /// Constant gradient of `u` on triangle `t`.
    pub fn gradient(&self, t: usize) -> (f64, f64) {
        let [a, b, c] = self.mesh.triangles[t];
        let p = [self.mesh.nodes[a], self.mesh.nodes[b], self.mesh.nodes[c]];
        let u = [self.u[a], self.u[b], self.u[c]];
        let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for i in 0..3 {
            let e = p[(i + 2) % 3] - p[(i + 1) % 3];
            gx += -e.y / area2 * u[i];
            gy += e.x / area2 * u[i];
        }
        (gx, gy)
    }

    /// Mass-weighted mean of `u` over triangles with centroid `x > x_min`.
    pub fn mean_right_of(&self, x_min: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            if self.mesh.centroid(t).x > x_min {
                let a = self.mesh.area(t);
                num += a * tri.iter().map(|&v| self.u[v]).sum::<f64>() / 3.0;
                den += a;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// `int |D u|^2` split into its x and y parts.
    pub fn energies(&self) -> (f64, f64) {
        let mut ex = 0.0;
        let mut ey = 0.0;
        for t in 0..self.mesh.triangles.len() {
            let (gx, gy) = self.gradient(t);
            let a = self.mesh.area(t);
            ex += a * gx * gx;
            ey += a * gy * gy;
        }
        (ex, ey)
    }

    /// `int u^2` with the consistent mass matrix.
    pub fn l2_norm2(&self) -> f64 {
        let mut s = 0.0;
        for (t, &[a, b, c]) in self.mesh.triangles.iter().enumerate() {
            let (ua, ub, uc) = (self.u[a], self.u[b], self.u[c]);
            s += self.mesh.area(t) / 6.0 * (ua * ua + ub * ub + uc * uc + ua * ub + ub * uc + uc * ua);
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub mesh: MeshOptions,
    /// Relative eigenvalue change between two refinement levels that is
    /// accepted as converged.
    pub rel_tol: f64,
    /// Refinements beyond the first before giving up on `rel_tol`.
    pub max_extra_levels: usize,
    pub eigen: EigenOptions,
}

impl SolveOptions {
    pub fn new(target_edge: f64) -> Self {
        SolveOptions {
            mesh: MeshOptions::new(target_edge),
            rel_tol: 1e-4,
            max_extra_levels: 1,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergedSolution {
    pub solution: MeshSolution,
    /// Eigenvalues of all levels, coarsest first.
    pub level_mus: Vec<f64>,
    pub rel_change: f64,
    pub converged: bool,
    /// Richardson extrapolation of the last two levels (P1 eigenvalues
    /// converge at second order).
    pub mu_extrapolated: f64,
}

/// Meshes `poly`, then refines until two successive eigenvalues agree to
/// `rel_tol`. The finest solution is returned.
pub fn solve_converged(poly: &ConvexPolygon, opts: &SolveOptions) -> Result<ConvergedSolution> {
    let mut mesh = triangulate_with(poly, &opts.mesh)?;
    let mut sol = solve_neumann_eig_with(&mesh, &opts.eigen)?;
    let mut mus = vec![sol.mu1];
    let mut rel_change = f64::INFINITY;
    for _ in 0..=opts.max_extra_levels {
        let nodes = mesh.nodes.len() + mesh.n_edges();
        if nodes > opts.mesh.node_cap {
            return Err(Error::MeshBudget { nodes, cap: opts.mesh.node_cap });
        }
        mesh = refine(&mesh);
        sol = solve_neumann_eig_with(&mesh, &opts.eigen)?;
        let prev = *mus.last().expect("nonempty");
        mus.push(sol.mu1);
        rel_change = (prev - sol.mu1).abs() / sol.mu1;
        if rel_change < opts.rel_tol {
            break;
        }
    }
    let l = mus.len();
    let mu_extrapolated = (4.0 * mus[l - 1] - mus[l - 2]) / 3.0;
    Ok(ConvergedSolution {
        solution: sol,
        level_mus: mus,
        rel_change,
        converged: rel_change < opts.rel_tol,
        mu_extrapolated,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradientBoundReport {
    /// `max_T |D u|_T / (sqrt(mu) sqrt(max(1e-12, 1 - ubar_T^2)))`.
    pub max_ratio: f64,
    pub flagged: bool,
}

/// Checks the pointwise gradient estimate `|D u| <= sqrt(mu) sqrt(1 - u^2)`
/// triangle by triangle, with `u` replaced by its face average.
pub fn gradient_bound_check(sol: &MeshSolution) -> GradientBoundReport {
    let sq = sol.mu1.sqrt();
    let mut max_ratio: f64 = 0.0;
    for (t, tri) in sol.mesh.triangles.iter().enumerate() {
        let (gx, gy) = sol.gradient(t);
        let ubar = tri.iter().map(|&v| sol.u[v]).sum::<f64>() / 3.0;
        let r = gx.hypot(gy) / (sq * (1.0 - ubar * ubar).max(1e-12).sqrt());
        max_ratio = max_ratio.max(r);
    }
    GradientBoundReport { max_ratio, flagged: max_ratio > 1.1 }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionalProfile {
    pub bin_edges: Vec<f64>,
    /// Largest `|D u|` among triangles whose centroid falls in each bin
    /// (0 for empty bins).
    pub max_grad: Vec<f64>,
    /// `max_grad / max(eps, ||x||)` with `||x||` taken at the bin centre.
    pub ratio: Vec<f64>,
    pub max_ratio: f64,
    /// `max |D u| / eps` over triangles with centroid in `[0, eps]` or
    /// `[d - eps, d]`.
    pub end_ratio: f64,
}

/// `|D u|` against `max(eps, ||x||)`, binned by centroid abscissa. The mesh
/// must be in the w-frame of `profile`.
pub fn directional_profile(sol: &MeshSolution, profile: &HeightProfile, n_bins: usize) -> DirectionalProfile {
    let d = profile.d;
    let eps = profile.max_h();
    let n_bins = n_bins.max(1);
    let mut max_grad = vec![0.0f64; n_bins];
    let mut end_max = 0.0f64;
    for t in 0..sol.mesh.triangles.len() {
        let x = sol.mesh.centroid(t).x.clamp(0.0, d);
        let (gx, gy) = sol.gradient(t);
        let g = gx.hypot(gy);
        let b = ((x / d * n_bins as f64) as usize).min(n_bins - 1);
        max_grad[b] = max_grad[b].max(g);
        if x <= eps || x >= d - eps {
            end_max = end_max.max(g);
        }
    }
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| d * i as f64 / n_bins as f64).collect();
    let ratio: Vec<f64> = max_grad
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let c = 0.5 * (bin_edges[i] + bin_edges[i + 1]);
            g / eps.max(dist_to_ends(c, d))
        })
        .collect();
    DirectionalProfile {
        max_ratio: ratio.iter().cloned().fold(0.0, f64::max),
        end_ratio: end_max / eps,
        bin_edges,
        max_grad,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::triangulate;
    use crate::geom::Point;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn square_eigenvalue() {
        let s = 2f64.sqrt();
        let poly = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(s, 0.0),
            Point::new(s, s),
            Point::new(0.0, s),
        ])
        .unwrap();
        let sol = solve_neumann_eig(&triangulate(&poly, 0.05).unwrap()).unwrap();
        assert_relative_eq!(sol.mu1, PI * PI / 2.0, max_relative = 5e-3);
        assert!(sol.mean.abs() < 1e-10);
        assert_eq!(sol.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        assert!(sol.k > 0.0 && sol.k <= 1.0);
    }

    #[test]
    fn energy_identity() {
        let poly = ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.4)]).unwrap();
        let sol = solve_neumann_eig(&triangulate(&poly, 0.05).unwrap()).unwrap();
        let (ex, ey) = sol.energies();
        assert_relative_eq!(ex + ey, sol.mu1 * sol.l2_norm2(), max_relative = 1e-8);
    }
}
