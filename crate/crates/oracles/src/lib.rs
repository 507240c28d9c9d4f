//! Brute-force reference implementations for the lcdr test suites.
//!
//! Nothing here calls into the numerical routines it is used to check.
//! Everything is plain loops over `ndarray` storage; the only exception is
//! [`fd_gradient_oracle`], which by construction differentiates
//! `LeModel::loss` numerically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use lcdr::LeModel;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type OracleResult<T> = std::result::Result<T, String>;

/// Largest total free dimension the grid oracle accepts.
pub const GRID_MAX_FREE_DIM: usize = 3;

/// `½ Σ_c Σ_ij F_ic T_ij F_jc` by explicit loops.
pub fn qp_objective(t: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> f64 {
    let (n, q) = f.dim();
    let mut s = 0.0;
    for c in 0..q {
        for i in 0..n {
            for j in 0..n {
                s += f[[i, c]] * t[[i, j]] * f[[j, c]];
            }
        }
    }
    0.5 * s
}

/// `Σ_ij w_ij ‖f_i/√d_i − f_j/√d_j‖²` with `d_i = Σ_j w_ij`.
pub fn pairwise_smoothness(w: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> f64 {
    let (n, q) = f.dim();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[[i, j]]).sum()).collect();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut dist = 0.0;
            for c in 0..q {
                let diff = f[[i, c]] / deg[i].sqrt() - f[[j, c]] / deg[j].sqrt();
                dist += diff * diff;
            }
            s += w[[i, j]] * dist;
        }
    }
    s
}

/// Grid points of the simplex over `support` with spacing `1/steps`.
fn simplex_grid(support: ArrayView1<'_, f64>, steps: usize) -> Vec<Vec<f64>> {
    let q = support.len();
    let idx: Vec<usize> = (0..q).filter(|&c| support[c] > 0.0).collect();
    let mut out = Vec::new();
    let mut counts = vec![0usize; idx.len()];
    fn rec(
        pos: usize,
        remaining: usize,
        counts: &mut Vec<usize>,
        idx: &[usize],
        q: usize,
        steps: usize,
        out: &mut Vec<Vec<f64>>,
    ) {
        if pos + 1 == idx.len() {
            counts[pos] = remaining;
            let mut v = vec![0.0; q];
            for (k, &c) in idx.iter().enumerate() {
                v[c] = counts[k] as f64 / steps as f64;
            }
            out.push(v);
            return;
        }
        for take in 0..=remaining {
            counts[pos] = take;
            rec(pos + 1, remaining - take, counts, idx, q, steps, out);
        }
    }
    rec(0, steps, &mut counts, &idx, q, steps, &mut out);
    out
}

/// Exhaustive grid search over the product of restricted simplices.
/// Returns the grid minimizer and its objective.
pub fn grid_qp_oracle(
    t: ArrayView2<'_, f64>,
    labels: ArrayView2<'_, f64>,
    resolution: f64,
) -> OracleResult<(Array2<f64>, f64)> {
    let (n, q) = labels.dim();
    if t.dim() != (n, n) {
        return Err(format!("T is {:?} but labels have {n} rows", t.dim()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(format!("resolution {resolution} must be in (0, 1]"));
    }
    let mut free = 0;
    for (i, row) in labels.outer_iter().enumerate() {
        let s = row.iter().filter(|&&v| v > 0.0).count();
        if s == 0 {
            return Err(format!("row {} has empty support", i + 1));
        }
        free += s - 1;
    }
    if free > GRID_MAX_FREE_DIM {
        return Err(format!(
            "feasible set has {free} free dimensions, at most {GRID_MAX_FREE_DIM} supported"
        ));
    }
    let steps = (1.0 / resolution).round() as usize;
    let grids: Vec<Vec<Vec<f64>>> = labels
        .outer_iter()
        .map(|row| simplex_grid(row, steps))
        .collect();

    let tflat: Vec<f64> = t.iter().copied().collect();
    let objective = |choice: &[usize]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            let fi = &grids[i][choice[i]];
            for j in 0..n {
                let fj = &grids[j][choice[j]];
                let mut dot = 0.0;
                for c in 0..q {
                    dot += fi[c] * fj[c];
                }
                s += tflat[i * n + j] * dot;
            }
        }
        0.5 * s
    };

    let mut best_obj = f64::INFINITY;
    let mut best = vec![0usize; n];
    let mut choice = vec![0usize; n];
    loop {
        let obj = objective(&choice);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&choice);
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                let out = Array2::from_shape_fn((n, q), |(r, c)| grids[r][best[r]][c]);
                return Ok((out, best_obj));
            }
            choice[i] += 1;
            if choice[i] < grids[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Nearest point of the restricted simplex (support size ≤ 3) to `v`, by
/// grid search repeatedly zoomed around the incumbent.
pub fn brute_force_projection(v: ArrayView1<'_, f64>, support: ArrayView1<'_, f64>) -> OracleResult<Array1<f64>> {
    let q = v.len();
    let idx: Vec<usize> = (0..q).filter(|&c| support[c] > 0.0).collect();
    let point = |free: &[f64]| -> Option<Array1<f64>> {
        let mut p = Array1::zeros(q);
        let mut rest = 1.0;
        for (k, &c) in idx.iter().take(idx.len() - 1).enumerate() {
            if free[k] < 0.0 {
                return None;
            }
            p[c] = free[k];
            rest -= free[k];
        }
        if rest < 0.0 {
            return None;
        }
        p[*idx.last().unwrap()] = rest;
        Some(p)
    };
    // Change in squared distance moving from `from` to `to`, written as
    // Σ δ_j (to_j + from_j − 2 v_j) so that tiny moves are resolved.
    let delta = |from: &[f64], to: &[f64]| -> f64 {
        let mut s = 0.0;
        let mut last = 0.0;
        for (k, &c) in idx.iter().take(idx.len() - 1).enumerate() {
            let d = to[k] - from[k];
            s += d * (to[k] + from[k] - 2.0 * v[c]);
            last -= d;
        }
        let c = *idx.last().unwrap();
        let from_last = 1.0 - from.iter().sum::<f64>();
        let to_last = 1.0 - to.iter().sum::<f64>();
        s + last * (to_last + from_last - 2.0 * v[c])
    };
    match idx.len() {
        0 => return Err("empty support".into()),
        1 => return Ok(point(&[]).unwrap()),
        2 | 3 => {}
        s => return Err(format!("support of size {s} is too large")),
    }
    let dims = idx.len() - 1;
    let mut center = vec![0.5; dims];
    let mut half_width = 0.5;
    let per_dim = 41;
    while half_width > 1e-14 {
        let mut best = (0.0, center.clone());
        let mut counter = vec![0usize; dims];
        loop {
            let cand: Vec<f64> = (0..dims)
                .map(|k| center[k] - half_width + 2.0 * half_width * counter[k] as f64 / (per_dim - 1) as f64)
                .collect();
            if point(&cand).is_some() {
                let d = delta(&center, &cand);
                if d < best.0 {
                    best = (d, cand);
                }
            }
            let mut k = 0;
            while k < dims {
                counter[k] += 1;
                if counter[k] < per_dim {
                    break;
                }
                counter[k] = 0;
                k += 1;
            }
            if k == dims {
                break;
            }
        }
        center = best.1;
        half_width /= 8.0;
    }
    Ok(point(&center).unwrap())
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Checks positive definiteness through the leading pivots of Gaussian
/// elimination without pivoting.
fn is_positive_definite(b: ArrayView2<'_, f64>) -> bool {
    let n = b.nrows();
    let mut m = b.to_owned();
    for k in 0..n {
        if !(m[[k, k]] > 0.0) {
            return false;
        }
        for i in (k + 1)..n {
            let factor = m[[i, k]] / m[[k, k]];
            for j in k..n {
                m[[i, j]] -= factor * m[[k, j]];
            }
        }
    }
    true
}

/// Modified Gram-Schmidt in the B inner product.
pub fn b_orthonormalize(g: &Array2<f64>, b: ArrayView2<'_, f64>) -> OracleResult<Array2<f64>> {
    let (d, k) = g.dim();
    let bdot = |x: &Array1<f64>, y: &Array1<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += x[i] * b[[i, j]] * y[j];
            }
        }
        s
    };
    let mut cols: Vec<Array1<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        let mut v = g.column(c).to_owned();
        for prev in &cols {
            let proj = bdot(prev, &v);
            v = &v - &(prev * proj);
        }
        let norm2 = bdot(&v, &v);
        if !(norm2 > 0.0) {
            return Err("degenerate basis".into());
        }
        v /= norm2.sqrt();
        cols.push(v);
    }
    let mut out = Array2::zeros((d, k));
    for (c, v) in cols.iter().enumerate() {
        out.column_mut(c).assign(v);
    }
    Ok(out)
}

/// `tr(Pᵀ A P)` by loops.
pub fn trace_form(a: ArrayView2<'_, f64>, p: ArrayView2<'_, f64>) -> f64 {
    let (d, k) = p.dim();
    let mut s = 0.0;
    for c in 0..k {
        for i in 0..d {
            for j in 0..d {
                s += p[[i, c]] * a[[i, j]] * p[[j, c]];
            }
        }
    }
    s
}

/// Best `tr(Pᵀ A P)` over `trials` random B-orthonormal d × d′ bases.
pub fn rayleigh_oracle(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    trials: usize,
    d_prime: usize,
    seed: u64,
) -> OracleResult<f64> {
    let d = a.nrows();
    if trials == 0 {
        return Err("trials must be positive".into());
    }
    if d_prime == 0 || d_prime > d {
        return Err(format!("d' = {d_prime} outside [1, {d}]"));
    }
    if !is_positive_definite(b) {
        return Err("B is not positive definite".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..trials {
        let g = gaussian_matrix(&mut rng, d, d_prime);
        let p = b_orthonormalize(&g, b)?;
        best = best.max(trace_form(a, p.view()));
    }
    Ok(best)
}

/// Central finite differences of `LeModel::loss` with respect to W.
pub fn fd_gradient_oracle(
    model: &LeModel,
    x: ArrayView2<'_, f64>,
    f: ArrayView2<'_, f64>,
    step: f64,
) -> OracleResult<Array2<f64>> {
    if !(step > 0.0) {
        return Err(format!("step {step} must be positive"));
    }
    let (q, d) = model.weights.dim();
    let mut grad = Array2::zeros((q, d));
    let mut probe = model.clone();
    for r in 0..q {
        for c in 0..d {
            let w = model.weights[[r, c]];
            probe.weights[[r, c]] = w + step;
            let up = probe.loss(x, f).map_err(|e| e.to_string())?;
            probe.weights[[r, c]] = w - step;
            let down = probe.loss(x, f).map_err(|e| e.to_string())?;
            probe.weights[[r, c]] = w;
            grad[[r, c]] = (up - down) / (2.0 * step);
        }
    }
    Ok(grad)
}

/// `Σ_i ‖f_i − softmax(ReLU(W x_i))‖² + β‖W‖²` written out independently.
pub fn naive_le_loss(w: ArrayView2<'_, f64>, beta: f64, x: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> f64 {
    let (q, d) = w.dim();
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let mut act = vec![0.0; q];
        for r in 0..q {
            let mut z = 0.0;
            for c in 0..d {
                z += w[[r, c]] * x[[i, c]];
            }
            act[r] = if z > 0.0 { z } else { 0.0 };
        }
        let m = act.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = act.iter().map(|a| (a - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        for r in 0..q {
            let diff = f[[i, r]] - exps[r] / z;
            total += diff * diff;
        }
    }
    let mut reg = 0.0;
    for v in w.iter() {
        reg += v * v;
    }
    total + beta * reg
}

pub fn naive_matmul(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = a.dim();
    let m = b.ncols();
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for l in 0..k {
                s += a[[i, l]] * b[[l, j]];
            }
            out[[i, j]] = s;
        }
    }
    out
}

pub fn naive_sq_dists(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                s += (x[[i, c]] - x[[j, c]]).powi(2);
            }
            out[[i, j]] = s;
        }
    }
    out
}

/// `(n − 1)^{-2} tr(H K H L)` with H formed explicitly and three dense
/// products.
pub fn naive_hsic(k: ArrayView2<'_, f64>, l: ArrayView2<'_, f64>) -> f64 {
    let n = k.nrows();
    let h = Array2::from_shape_fn((n, n), |(i, j)| (if i == j { 1.0 } else { 0.0 }) - 1.0 / n as f64);
    let hk = naive_matmul(h.view(), k);
    let hkh = naive_matmul(hk.view(), h.view());
    let prod = naive_matmul(hkh.view(), l);
    let tr: f64 = (0..n).map(|i| prod[[i, i]]).sum();
    tr / ((n - 1) as f64).powi(2)
}

/// Random probability vector of length q with strictly positive entries.
pub fn random_distribution(rng: &mut impl Rng, q: usize) -> Array1<f64> {
    let mut v: Array1<f64> = (0..q).map(|_| rng.random_range(1e-3..1.0)).collect();
    let s = v.sum();
    v /= s;
    v
}

/// Random symmetric nonnegative weight matrix with zero diagonal and
/// positive degrees.
pub fn random_weights(rng: &mut impl Rng, n: usize) -> Array2<f64> {
    loop {
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(0.7) {
                    let v = rng.random_range(0.05..2.0);
                    w[[i, j]] = v;
                    w[[j, i]] = v;
                }
            }
        }
        if (0..n).all(|i| w.row(i).sum() > 0.0) {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(array![1.0, 1.0, 1.0].view(), 4).len(), 15);
        assert_eq!(simplex_grid(array![0.0, 1.0, 0.0].view(), 4), vec![vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn grid_oracle_single_support_rows() {
        let t = array![[4.0, -2.0], [-2.0, 4.0]];
        let l = array![[1.0, 0.0], [0.0, 1.0]];
        let (f, _) = grid_qp_oracle(t.view(), l.view(), 0.1).unwrap();
        assert_eq!(f, array![[1.0, 0.0], [0.0, 1.0]]);
        let big = Array2::<f64>::ones((2, 3));
        assert!(grid_qp_oracle(t.view(), big.view(), 0.1).is_err());
    }

    #[test]
    fn projection_brute_force() {
        let p = brute_force_projection(array![2.0, 0.0].view(), array![1.0, 1.0].view()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn rayleigh_rejects() {
        let a = Array2::<f64>::eye(2);
        assert!(rayleigh_oracle(a.view(), a.view(), 0, 1, 0).is_err());
        let indefinite = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(rayleigh_oracle(a.view(), indefinite.view(), 10, 1, 0).is_err());
    }
}
