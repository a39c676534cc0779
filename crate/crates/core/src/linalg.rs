//! Dense least-squares kernels shared by the trainers.
//!
//! A tall system `min |X w - y|` is first compressed with a chunked
//! (tall-skinny) QR of the augmented matrix `[X | y]`: the triangular factor
//! `R_aug` satisfies `|X w - y|^2 = |R w - c|^2 + rho^2`, so any solver on
//! `(R, c)` solves the original problem. The compressed system is then
//! factored once by SVD, and both the pseudo-inverse solution and every ridge
//! solution along the multiplier path are read off that factorization.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;

const MIN_CHUNK_ROWS: usize = 2048;

/// Compress `[x | y]` to an upper-triangular `(N+1) x (N+1)` factor, or return
/// the system unchanged when it is not tall enough to benefit.
fn compress(x: &DMatrix<f64>, y: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let (n, p) = x.shape();
    if n <= 2 * chunk_rows(p + 1) {
        return (x.clone(), DVector::from_column_slice(y));
    }
    let r = augmented_factor(x, y);
    let c = DVector::from_iterator(p, (0..p).map(|i| r[(i, p)]));
    let rr = r.view((0, 0), (p, p)).into_owned();
    (rr, c)
}

fn chunk_rows(width: usize) -> usize {
    (4 * width).max(MIN_CHUNK_ROWS)
}

/// Triangular factor `R` of `[x | y]`: `|[x | y] v| = |R v|` for every `v`.
fn augmented_factor(x: &DMatrix<f64>, y: &[f64]) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let width = p + 1;
    let chunk = chunk_rows(width);
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();
    let blocks: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&s| {
            let len = chunk.min(n - s);
            let mut block = DMatrix::<f64>::zeros(len, width);
            block.columns_mut(0, p).copy_from(&x.rows(s, len));
            block.column_mut(p).copy_from_slice(&y[s..s + len]);
            triangular_factor(block)
        })
        .collect();

    let mut r = stack_and_reduce(blocks, width);
    while r.nrows() > width {
        r = triangular_factor(r);
    }
    r
}

/// A tall least-squares system `[X | y]` reduced once so that least squares
/// on any leading block of columns of `X` can be solved without revisiting
/// the rows.
#[derive(Debug, Clone)]
pub struct CompressedSystem {
    r: DMatrix<f64>,
    rows: usize,
}

impl CompressedSystem {
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::dim("least squares", x.nrows(), y.len()));
        }
        if x.nrows() == 0 {
            return Err(Error::Empty("training data"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("least squares", "non-finite input"));
        }
        Ok(CompressedSystem {
            r: augmented_factor(x, y),
            rows: x.nrows(),
        })
    }

    /// Number of rows of the original system.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.r.ncols() - 1
    }

    /// Reduced `(R_k, c)` for the first `k` columns.
    pub fn leading(&self, k: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
        if k == 0 || k > self.columns() {
            return Err(Error::invalid("compressed system", format!("cannot take {k} of {} columns", self.columns())));
        }
        let p = self.columns();
        let x = self.r.columns(0, k).into_owned();
        let y = self.r.column(p).iter().copied().collect();
        Ok((x, y))
    }

    /// `(1/n) |X_k w - y|^2` for the first `k = w.len()` columns.
    pub fn risk(&self, w: &DVector<f64>) -> f64 {
        let p = self.columns();
        let k = w.len();
        let resid = self.r.columns(0, k) * w - self.r.column(p);
        resid.norm_squared() / self.rows as f64
    }
}

fn triangular_factor(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().r()
}

fn stack_and_reduce(blocks: Vec<DMatrix<f64>>, width: usize) -> DMatrix<f64> {
    // Fixed pairing order keeps the result independent of the thread count.
    let mut level = blocks;
    while level.len() > 1 {
        let pairs: Vec<Vec<DMatrix<f64>>> = level
            .chunks(8)
            .map(|c| c.to_vec())
            .collect();
        level = pairs
            .into_par_iter()
            .map(|group| {
                let rows: usize = group.iter().map(|g| g.nrows()).sum();
                let mut stacked = DMatrix::<f64>::zeros(rows, width);
                let mut at = 0;
                for g in &group {
                    stacked.rows_mut(at, g.nrows()).copy_from(g);
                    at += g.nrows();
                }
                triangular_factor(stacked)
            })
            .collect();
    }
    level.pop().unwrap_or_else(|| DMatrix::zeros(0, width))
}

/// SVD of a (compressed) least-squares system, truncated to its numerical rank.
#[derive(Debug, Clone)]
pub struct LeastSquaresFactor {
    /// Kept singular values, descending.
    singular: Vec<f64>,
    /// Right singular vectors for the kept values, `N x rank`.
    v: DMatrix<f64>,
    /// `U^T y` restricted to the kept values.
    projected: Vec<f64>,
    n_features: usize,
    largest: f64,
}

impl LeastSquaresFactor {
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::dim("least squares", x.nrows(), y.len()));
        }
        if x.nrows() == 0 {
            return Err(Error::Empty("training data"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("least squares", "non-finite input"));
        }
        let p = x.ncols();
        let (r, c) = compress(x, y);
        let m = faer::Mat::<f64>::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)]);
        let svd = m
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
        let (u, s, v_full) = (svd.U(), svd.S().column_vector(), svd.V());

        let largest = s.iter().cloned().fold(0.0, f64::max);
        let cutoff = largest * SVD_RELATIVE_CUTOFF;
        let mut order: Vec<usize> = (0..s.nrows()).filter(|&i| s[i] > cutoff && s[i] > 0.0).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

        let singular = order.iter().map(|&i| s[i]).collect();
        let projected = order
            .iter()
            .map(|&i| (0..c.len()).map(|k| u[(k, i)] * c[k]).sum())
            .collect();
        let v = DMatrix::from_fn(p, order.len(), |j, k| v_full[(j, order[k])]);
        Ok(LeastSquaresFactor {
            singular,
            v,
            projected,
            n_features: p,
            largest,
        })
    }

    pub fn rank(&self) -> usize {
        self.singular.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.largest
    }

    /// Coefficients of the ridge solution with multiplier `t` in the
    /// right-singular basis: `s_i c_i / (s_i^2 + t)`.
    fn coefficients(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        self.singular
            .iter()
            .zip(&self.projected)
            .map(move |(s, c)| s * c / (s * s + t))
    }

    /// `|(X^T X + t I)^+ X^T y|`, computed without forming the solution.
    pub fn ridge_norm(&self, t: f64) -> f64 {
        self.coefficients(t).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `(X^T X + t I)^+ X^T y`; `t = 0` is the minimum-norm least-squares solution.
    pub fn ridge_solution(&self, t: f64) -> DVector<f64> {
        let coef = DVector::from_iterator(self.rank(), self.coefficients(t));
        if self.rank() == 0 {
            return DVector::zeros(self.n_features);
        }
        &self.v * coef
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
