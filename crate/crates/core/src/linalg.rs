//! Sparse symmetric generalized eigenproblems `K x = lambda M x`.
//!
//! The smallest eigenpairs on the M-orthogonal complement of a known null
//! vector (the constants, for Neumann problems) are found by shift-invert
//! subspace iteration with Rayleigh-Ritz. `K + shift*M` is factored once by a
//! sparse LDL^T with reverse Cuthill-McKee ordering.

use nalgebra::{DMatrix, SymmetricEigen};
use sprs::{CsMat, FillInReduction, SymmetryCheck, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};

/// Assembles a square sparse matrix from `(row, col, value)` triplets;
/// duplicates are summed in insertion order.
pub fn assemble(n: usize, triplets: &[(usize, usize, f64)]) -> CsMat<f64> {
    let mut tri = TriMat::with_capacity((n, n), triplets.len());
    for &(i, j, v) in triplets {
        tri.add_triplet(i, j, v);
    }
    tri.to_csr()
}

pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        let mut s = 0.0;
        for (j, &v) in row.iter() {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `x^T A x`.
pub fn quad_form(a: &CsMat<f64>, x: &[f64]) -> f64 {
    dot(x, &matvec(a, x))
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Shift `s` in `(K + s M)^{-1}`; must make the matrix positive definite.
    pub shift: f64,
    /// Subspace dimension.
    pub block: usize,
    /// Target for `||K x - lambda M x|| / ||M x||`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { shift: 1.0, block: 6, tol: 1e-12, max_iter: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||K x - lambda M x|| / ||M x||`.
    pub residual: f64,
    /// `||K x - lambda M x|| / ((||K|| + |lambda| ||M||) ||x||)` in the
    /// infinity norm; bounded below by rounding, the other is not.
    pub backward_error: f64,
    pub iterations: usize,
    /// All Ritz values of the final subspace, ascending.
    pub ritz_values: Vec<f64>,
}

struct Deflation<'a> {
    null: &'a [f64],
    m_null: Vec<f64>,
    nmn: f64,
}

impl<'a> Deflation<'a> {
    fn new(m: &CsMat<f64>, null: &'a [f64]) -> Self {
        let m_null = matvec(m, null);
        let nmn = dot(null, &m_null);
        Deflation { null, m_null, nmn }
    }

    fn apply(&self, x: &mut [f64]) {
        let c = dot(&self.m_null, x) / self.nmn;
        for (xi, ni) in x.iter_mut().zip(self.null) {
            *xi -= c * ni;
        }
    }
}

/// Modified Gram-Schmidt in the M inner product (two passes). Vectors that
/// become numerically dependent are dropped.
fn m_orthonormalize(m: &CsMat<f64>, vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    let mut m_out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs {
        let n0 = dot(&v, &matvec(m, &v)).sqrt();
        if !(n0 > 0.0) {
            continue;
        }
        for _ in 0..2 {
            for (q, mq) in out.iter().zip(&m_out) {
                let c = dot(mq, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let mv = matvec(m, &v);
        let nv = dot(&v, &mv).sqrt();
        if nv <= 1e-10 * n0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        out.push(v);
        m_out.push(mv.into_iter().map(|x| x / nv).collect());
    }
    out
}

fn inf_norm(a: &CsMat<f64>) -> f64 {
    a.outer_iterator()
        .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub struct ShiftInvert {
    factor: LdlNumeric<f64, usize>,
}

impl ShiftInvert {
    pub fn new(k: &CsMat<f64>, m: &CsMat<f64>, shift: f64) -> Result<Self> {
        let a = k + &m.map(|v| v * shift);
        let factor = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(a.view())
            .map_err(|e| Error::Linalg(format!("LDL factorization failed: {e:?}")))?;
        if factor.d().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Linalg("shifted matrix is not positive definite".into()));
        }
        Ok(ShiftInvert { factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }
}

/// Smallest eigenpair of `K x = lambda M x` restricted to the M-orthogonal
/// complement of `null`, starting from the deterministic block `start`.
pub fn smallest_deflated(
    k: &CsMat<f64>,
    m: &CsMat<f64>,
    null: &[f64],
    start: Vec<Vec<f64>>,
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let n = k.rows();
    if n < 2 {
        return Err(Error::invalid("eigenproblem needs at least two unknowns"));
    }
    let defl = Deflation::new(m, null);
    let (k_norm, m_norm) = (inf_norm(k), inf_norm(m));
    let op = ShiftInvert::new(k, m, opts.shift)?;

    let mut block: Vec<Vec<f64>> = start.into_iter().take(opts.block.min(n - 1)).collect();
    for v in &mut block {
        defl.apply(v);
    }
    let mut x = m_orthonormalize(m, block);
    if x.is_empty() {
        return Err(Error::invalid("start block is orthogonal to everything but the null vector"));
    }

    let mut best: Option<EigenPair> = None;
    let mut history: Vec<f64> = Vec::new();
    let mut stall = 0;
    for iter in 1..=opts.max_iter {
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|v| {
                let mut w = op.solve(&matvec(m, v));
                defl.apply(&mut w);
                w
            })
            .collect();
        let y = m_orthonormalize(m, y);
        let p = y.len();
        if p == 0 {
            return Err(Error::Linalg("subspace collapsed".into()));
        }
        let ky: Vec<Vec<f64>> = y.iter().map(|v| matvec(k, v)).collect();
        let mut kr = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let v = 0.5 * (dot(&y[i], &ky[j]) + dot(&y[j], &ky[i]));
                kr[(i, j)] = v;
                kr[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(kr);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let z = eig.eigenvectors[(r, c)];
                    for (vi, yi) in v.iter_mut().zip(yr) {
                        *vi += z * yi;
                    }
                }
                v
            })
            .collect();
        let ritz: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();

        let lam = ritz[0];
        let kx = matvec(k, &x[0]);
        let mx = matvec(m, &x[0]);
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lam * b).collect();
        let rn = norm(&r);
        let residual = rn / norm(&mx);
        let backward_error = rn / ((k_norm + lam.abs() * m_norm) * norm(&x[0]));
        let pair = EigenPair {
            value: lam,
            vector: x[0].clone(),
            residual,
            backward_error,
            iterations: iter,
            ritz_values: ritz,
        };
        history.push(lam);
        if history.len() > 8 {
            history.remove(0);
        }
        if residual <= opts.tol || backward_error <= 4.0 * f64::EPSILON {
            return Ok(pair);
        }
        match &best {
            Some(b) if b.residual <= residual * 0.999 => stall += 1,
            _ => stall = 0,
        }
        if best.as_ref().map_or(true, |b| residual < b.residual) {
            best = Some(pair);
        }
        // Stagnation at the rounding floor: return the best pair found.
        if stall >= 8 {
            break;
        }
    }
    let b = best.expect("at least one iteration ran");
    // The residual of the Ritz vector can stall well above rounding while
    // the Ritz value itself no longer moves; accept that state.
    let spread = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - history.iter().cloned().fold(f64::INFINITY, f64::min);
    if b.backward_error <= 1e-12 || (b.backward_error <= 1e-9 && spread <= 1e-12 * b.value.abs()) {
        Ok(b)
    } else {
        Err(Error::NoConvergence { iterations: b.iterations, residual: b.residual })
    }
}
