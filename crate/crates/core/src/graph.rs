//! k-nearest-neighbor similarity graph with Gaussian edge weights.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Bandwidth selection for the Gaussian weights `exp(-‖xi − xj‖² / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SigmaMode {
    Fixed(f64),
    /// σ is the mean, over all points, of the distance to the k-th nearest
    /// neighbor.
    #[default]
    MeanKnnDistance,
}

/// Symmetric weight matrix and degrees of the neighbor graph.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub weights: Array2<f64>,
    pub degrees: Array1<f64>,
    pub k: usize,
    pub sigma: f64,
}

/// Squared Euclidean distances between all rows. Every entry is computed
/// independently from the two rows, so the result is exactly symmetric.
pub fn pairwise_sq_dists(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points, got {n}"
        )));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("NaN in feature matrix".into()));
    }
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let d: f64 = xi
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    Ok(out)
}

/// Indices of the k nearest neighbors of `i` (self excluded), closest first;
/// ties go to the smaller index.
fn nearest(dists: &Array2<f64>, i: usize, k: usize) -> Vec<usize> {
    let row = dists.row(i);
    let mut idx: Vec<usize> = (0..row.len()).filter(|&j| j != i).collect();
    idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn build_graph(x: ArrayView2<'_, f64>, k: usize, sigma_mode: SigmaMode) -> Result<NeighborGraph> {
    let n = x.nrows();
    if k < 1 || k + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in [1, {}]",
            n.saturating_sub(1)
        )));
    }
    if let SigmaMode::Fixed(s) = sigma_mode {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma = {s} must be > 0")));
        }
    }
    let dists = pairwise_sq_dists(x)?;
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| nearest(&dists, i, k)).collect();

    let sigma = match sigma_mode {
        SigmaMode::Fixed(s) => s,
        SigmaMode::MeanKnnDistance => {
            let total: f64 = neighbors
                .iter()
                .enumerate()
                .map(|(i, nb)| dists[[i, nb[k - 1]]].sqrt())
                .sum();
            let s = total / n as f64;
            if !(s > 0.0) {
                return Err(Error::InvalidArgument(
                    "mean k-th neighbor distance is zero; use a fixed sigma".into(),
                ));
            }
            s
        }
    };

    let inv_s2 = 1.0 / (sigma * sigma);
    let mut directed = Array2::<f64>::zeros((n, n));
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            directed[[i, j]] = (-dists[[i, j]] * inv_s2).exp();
        }
    }
    let weights = &directed + &directed.t();
    let degrees = weights.sum_axis(ndarray::Axis(1));
    Ok(NeighborGraph {
        weights,
        degrees,
        k,
        sigma,
    })
}
