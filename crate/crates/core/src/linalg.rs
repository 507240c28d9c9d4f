//! Small dense symmetric linear algebra: Cholesky factorization, triangular
//! solves and a cyclic Jacobi eigensolver. Sizes here are the feature
//! dimension (at most a few hundred), where Jacobi is fast and very accurate.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 100;

/// Lower-triangular `L` with `A = L Lᵀ`.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("cholesky of a non-square matrix".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower(l: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    x
}

/// Solves `Lᵀ X = B` for lower-triangular `L`.
pub fn solve_lower_transpose(l: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[[i, c]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    x
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: ArrayView2<'_, f64>) -> Array2<f64> {
    (&m + &m.t()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns unsorted eigenvalues and the matching eigenvectors as columns.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("eigen of a non-square matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to the eigensolver".into()));
    }
    let mut m = symmetrize(a);
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok((Array1::zeros(n), v));
    }

    for sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let negligible = 100.0 * apq.abs();
                if apq == 0.0
                    || (sweep > 3 && app.abs() + negligible == app.abs() && aqq.abs() + negligible == aqq.abs())
                {
                    m[[p, q]] = 0.0;
                    m[[q, p]] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok((m.diag().to_owned(), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_reconstructs() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let back = l.dot(&l.t());
        assert!((&back - &a).iter().all(|d| d.abs() < 1e-14));
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }

    #[test]
    fn triangular_solves() {
        let l = array![[2.0, 0.0], [1.0, 3.0]];
        let b = array![[4.0], [11.0]];
        let x = solve_lower(l.view(), b.view());
        assert_eq!(x, array![[2.0], [3.0]]);
        let y = solve_lower_transpose(l.view(), b.view());
        assert!((&l.t().dot(&y) - &b).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn jacobi_two_by_two() {
        let (vals, vecs) = symmetric_eigen(array![[2.0, 1.0], [1.0, 2.0]].view()).unwrap();
        let mut sorted = vals.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert!((sorted[0] - 1.0).abs() < 1e-14 && (sorted[1] - 3.0).abs() < 1e-14);
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        for i in 0..2 {
            let v = vecs.column(i);
            let r = a.dot(&v) - &v * vals[i];
            assert!(r.iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn jacobi_zero_and_diagonal() {
        let (vals, _) = symmetric_eigen(Array2::zeros((3, 3)).view()).unwrap();
        assert!(vals.iter().all(|&v| v == 0.0));
        let (vals, vecs) = symmetric_eigen(array![[3.0, 0.0], [0.0, -1.0]].view()).unwrap();
        assert_eq!(vals, array![3.0, -1.0]);
        assert_eq!(vecs, Array2::<f64>::eye(2));
    }
}
