//! Supervised dimensionality reduction by maximizing the Hilbert-Schmidt
//! independence criterion between projected features and label confidence.
//!
//! With instances as rows of X (n × d), the projection P (d × d′) maximizes
//! `tr(Pᵀ A P)` with `A = Xᵀ H F̃ H X` under the constraint
//! `Pᵀ B P = I`, `B = α XᵀX + (1 − α) I`. The optimum is spanned by the top
//! generalized eigenvectors of `A p = λ B p`, found here by reducing with the
//! Cholesky factor of B to a standard symmetric problem.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::confidence::ConfidenceMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative diagonal jitter added to B before factorization.
pub const B_JITTER: f64 = 1e-10;

pub const DEFAULT_D_PRIME: usize = 10;
pub const DEFAULT_ALPHA: f64 = 0.1;

/// A B-orthonormal projection onto the leading generalized eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// d × d′, columns are the projection vectors.
    pub p: Array2<f64>,
    /// Descending.
    pub eigenvalues: Array1<f64>,
    pub alpha: f64,
    pub d_prime: usize,
}

/// `H = I − (1/n) 𝟙𝟙ᵀ`.
pub fn centering_matrix(n: usize) -> Result<Array2<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "centering matrix needs n >= 2, got {n}"
        )));
    }
    let off = -1.0 / n as f64;
    let mut h = Array2::from_elem((n, n), off);
    h.diag_mut().mapv_inplace(|v| 1.0 + v);
    Ok(h)
}

/// Linear kernel on confidence vectors, `F Fᵀ`.
pub fn label_kernel(f: &ConfidenceMatrix) -> Array2<f64> {
    f.values.dot(&f.values.t())
}

/// Feature kernel of projected instances, label-confidence kernel and the
/// centering matrix.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub k: Array2<f64>,
    pub f_tilde: Array2<f64>,
    pub h: Array2<f64>,
}

impl KernelPair {
    /// `K = X̃ X̃ᵀ` for projected features X̃ (n × d′) and `F̃ = F Fᵀ`.
    pub fn new(x_tilde: ArrayView2<'_, f64>, f: &ConfidenceMatrix) -> Result<Self> {
        let n = x_tilde.nrows();
        if f.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} projected rows but {} confidence rows",
                f.n()
            )));
        }
        Ok(Self {
            k: x_tilde.dot(&x_tilde.t()),
            f_tilde: label_kernel(f),
            h: centering_matrix(n)?,
        })
    }

    pub fn hsic(&self) -> Result<f64> {
        hsic_value(self.k.view(), self.f_tilde.view())
    }
}

/// Subtracts row and column means, computing `H M H` without forming H.
fn double_center(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let row_means = m.mean_axis(Axis(1)).expect("non-empty");
    let col_means = m.mean_axis(Axis(0)).expect("non-empty");
    let grand = row_means.mean().expect("non-empty");
    let mut out = m.to_owned();
    for ((i, j), v) in out.indexed_iter_mut() {
        *v = *v - row_means[i] - col_means[j] + grand;
    }
    out
}

/// `(n − 1)^{-2} tr(H K H F̃)`.
pub fn hsic_value(k: ArrayView2<'_, f64>, f_tilde: ArrayView2<'_, f64>) -> Result<f64> {
    let n = k.nrows();
    if k.dim() != (n, n) || f_tilde.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "kernels are {:?} and {:?}",
            k.dim(),
            f_tilde.dim()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("HSIC needs n >= 2".into()));
    }
    // tr(HKH F̃) = Σ_ij (HKH)_ij F̃_ji
    let centered = double_center(k);
    let trace: f64 = centered
        .iter()
        .zip(f_tilde.t().iter())
        .map(|(a, b)| a * b)
        .sum();
    let denom = (n - 1) as f64;
    Ok(trace / (denom * denom))
}

/// The d × d matrices `A = Xᵀ H F̃ H X` (symmetrized) and
/// `B = α XᵀX + (1 − α) I` of the generalized eigenproblem.
pub fn dependence_matrices(
    x: ArrayView2<'_, f64>,
    f_tilde: ArrayView2<'_, f64>,
    alpha: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (n, d) = x.dim();
    if f_tilde.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows but F̃ is {:?}",
            f_tilde.dim()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1]")));
    }
    let centered = double_center(f_tilde);
    let a = linalg::symmetrize(x.t().dot(&centered).dot(&x).view());
    let mut b = x.t().dot(&x) * alpha;
    for i in 0..d {
        b[[i, i]] += 1.0 - alpha;
    }
    Ok((a, b))
}

/// Flips each column so its largest-magnitude entry (first on ties) is
/// positive; returns that entry's index per column.
fn sign_normalize(v: &mut Array2<f64>) -> Vec<usize> {
    let mut pivots = Vec::with_capacity(v.ncols());
    for mut col in v.axis_iter_mut(Axis(1)) {
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
        pivots.push(best);
    }
    pivots
}

/// Top-`d_prime` solutions of `A p = λ B p` for symmetric A and symmetric
/// positive definite B.
pub fn generalized_eigen(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    d_prime: usize,
) -> Result<(Array1<f64>, Array2<f64>)> {
    let d = a.nrows();
    if a.dim() != (d, d) || b.dim() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "A is {:?}, B is {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if d_prime < 1 || d_prime > d {
        return Err(Error::InvalidArgument(format!(
            "d' = {d_prime} must be in [1, {d}]"
        )));
    }
    let mut b = linalg::symmetrize(b);
    let jitter = B_JITTER * b.diag().sum() / d as f64;
    b.diag_mut().mapv_inplace(|v| v + jitter);
    let l = linalg::cholesky(b.view())?;

    // C = L⁻¹ A L⁻ᵀ
    let y = linalg::solve_lower(l.view(), a);
    let c = linalg::solve_lower(l.view(), y.t()).reversed_axes();
    let (vals, vecs) = linalg::symmetric_eigen(c.view())?;
    let mut p = linalg::solve_lower_transpose(l.view(), vecs.view());
    let pivots = sign_normalize(&mut p);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| match vals[j].total_cmp(&vals[i]) {
        Ordering::Equal => pivots[i].cmp(&pivots[j]),
        other => other,
    });
    order.truncate(d_prime);
    let eigenvalues = order.iter().map(|&i| vals[i]).collect();
    let p = p.select(Axis(1), &order);
    Ok((eigenvalues, p))
}

/// Solves for the HSIC-maximizing projection. X should already be
/// standardized column-wise.
pub fn solve_projection(
    x: ArrayView2<'_, f64>,
    f_tilde: ArrayView2<'_, f64>,
    alpha: f64,
    d_prime: usize,
) -> Result<Projection> {
    let d = x.ncols();
    if d_prime < 1 || d_prime > d {
        return Err(Error::InvalidArgument(format!(
            "d' = {d_prime} must be in [1, {d}]"
        )));
    }
    let (a, b) = dependence_matrices(x, f_tilde, alpha)?;
    let (eigenvalues, p) = generalized_eigen(a.view(), b.view(), d_prime)?;
    Ok(Projection {
        p,
        eigenvalues,
        alpha,
        d_prime,
    })
}

/// `X̃ = X P`.
pub fn project(x: ArrayView2<'_, f64>, proj: &Projection) -> Result<Array2<f64>> {
    if x.ncols() != proj.p.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} columns but P has {} rows",
            x.ncols(),
            proj.p.nrows()
        )));
    }
    Ok(x.dot(&proj.p))
}
