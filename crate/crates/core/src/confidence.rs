//! Label confidence from local consistency of the neighbor graph.
//!
//! The confidence matrix F (n × q) minimizes
//!
//! ```text
//! J(F) = ½ Σ_c F_cᵀ T F_c,   T = 4 (I − J^{-1/2} W J^{-1/2})
//! ```
//!
//! subject to every row lying on the probability simplex restricted to the
//! row's positive logical labels. The Hessian of the vectorized problem is
//! block diagonal with q copies of T, so the solver never forms it: the
//! gradient is simply `T · F`. Minimization is projected gradient descent
//! with step `1 / λ_max(T)` and step halving whenever an iterate would
//! increase the objective.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NeighborGraph;

/// Upper bound of the spectrum of T.
pub const SPECTRAL_BOUND: f64 = 8.0;

const POWER_ITERATIONS: usize = 30;
const POWER_SEED: u64 = 0x5EED_1A7E;
const MAX_STEP_HALVINGS: usize = 30;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// The matrix T and an estimate of its largest eigenvalue.
#[derive(Debug, Clone)]
pub struct SmoothingOperator {
    pub t: Array2<f64>,
    pub lipschitz: f64,
    /// Nonzeros of T per row, for products with sparse neighbor graphs.
    rows: Vec<Vec<(usize, f64)>>,
}

impl SmoothingOperator {
    /// Builds the operator from an explicit symmetric matrix.
    pub fn from_matrix(t: Array2<f64>) -> Result<Self> {
        if t.nrows() != t.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "T is {}×{}",
                t.nrows(),
                t.ncols()
            )));
        }
        let rows = t
            .outer_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        let mut op = Self {
            t,
            lipschitz: SPECTRAL_BOUND,
            rows,
        };
        let est = op.power_estimate();
        op.lipschitz = if est.is_finite() && est > 1e-12 {
            est.min(SPECTRAL_BOUND)
        } else {
            SPECTRAL_BOUND
        };
        Ok(op)
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    /// `T · F` using the sparse row structure.
    pub fn apply(&self, f: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(f.raw_dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = out.row_mut(i);
            for &(j, v) in row {
                acc.scaled_add(v, &f.row(j));
            }
        }
        out
    }

    fn apply_vec(&self, v: &Array1<f64>) -> Array1<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, t)| t * v[j]).sum())
            .collect()
    }

    /// Rayleigh quotient after a fixed number of power iterations from a
    /// seeded start vector.
    fn power_estimate(&self) -> f64 {
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let mut v: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut est = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let norm = v.dot(&v).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            v /= norm;
            let tv = self.apply_vec(&v);
            est = v.dot(&tv);
            v = tv;
        }
        est
    }

    /// `J(F) = ½ Σ_c F_cᵀ T F_c`.
    pub fn objective(&self, f: ArrayView2<'_, f64>) -> f64 {
        0.5 * (&f * &self.apply(f)).sum()
    }
}

/// Forms `T = 4 (I − J^{-1/2} W J^{-1/2})` for the graph.
pub fn build_smoother(graph: &NeighborGraph) -> Result<SmoothingOperator> {
    let n = graph.weights.nrows();
    if let Some(i) = graph.degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegree { node: i });
    }
    let deg = &graph.degrees;
    let mut t = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let s = graph.weights[[i, j]] / (deg[i] * deg[j]).sqrt();
            let id = if i == j { 1.0 } else { 0.0 };
            t[[i, j]] = 4.0 * (id - s);
        }
    }
    SmoothingOperator::from_matrix(t)
}

/// A feasible label-confidence matrix and the logical labels bounding it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    pub values: Array2<f64>,
    pub support: Array2<f64>,
}

impl ConfidenceMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }
}

fn check_supports(labels: ArrayView2<'_, f64>) -> Result<()> {
    for (i, row) in labels.outer_iter().enumerate() {
        if !row.iter().any(|&v| v > 0.0) {
            return Err(Error::EmptySupport { row: i + 1 });
        }
    }
    Ok(())
}

/// Uniform distribution over each row's positive labels.
pub fn init_confidence(labels: ArrayView2<'_, f64>) -> Result<ConfidenceMatrix> {
    check_supports(labels)?;
    let mut values = labels.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    for mut row in values.outer_iter_mut() {
        let count = row.sum();
        row.mapv_inplace(|v| v / count);
    }
    Ok(ConfidenceMatrix {
        values,
        support: labels.to_owned(),
    })
}

/// Euclidean projection of `v` onto `{f : Σf = 1, f ≥ 0, f_l = 0 where
/// support_l = 0}` by the sort-and-threshold simplex algorithm.
pub fn project_restricted_simplex(
    v: ArrayView1<'_, f64>,
    support: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    if v.len() != support.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector has {} entries, support {}",
            v.len(),
            support.len()
        )));
    }
    let mut out = v.to_owned();
    let mut scratch = Vec::with_capacity(v.len());
    project_into(out.as_slice_mut().expect("owned"), support, &mut scratch)?;
    Ok(out)
}

/// In-place projection; `scratch` avoids reallocating per row.
fn project_into(x: &mut [f64], support: ArrayView1<'_, f64>, scratch: &mut Vec<f64>) -> Result<()> {
    scratch.clear();
    scratch.extend(
        x.iter()
            .zip(support.iter())
            .filter(|(_, &s)| s > 0.0)
            .map(|(&v, _)| v),
    );
    match scratch.len() {
        0 => return Err(Error::EmptySupport { row: 0 }),
        1 => {
            for (xi, &s) in x.iter_mut().zip(support.iter()) {
                *xi = if s > 0.0 { 1.0 } else { 0.0 };
            }
            return Ok(());
        }
        _ => {}
    }
    scratch.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    for (xi, &s) in x.iter_mut().zip(support.iter()) {
        *xi = if s > 0.0 { (*xi - theta).max(0.0) } else { 0.0 };
    }
    Ok(())
}

/// Result of [`solve_confidence`].
#[derive(Debug, Clone)]
pub struct ConfidenceSolution {
    pub confidence: ConfidenceMatrix,
    pub objective: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before the change fell below `tol`.
    /// The iterate is still feasible and returned.
    pub converged: bool,
    /// Objective after every accepted iterate, starting with the initial one.
    pub history: Vec<f64>,
}

/// Projected gradient descent from the uniform-over-support start.
pub fn solve_confidence(
    op: &SmoothingOperator,
    labels: ArrayView2<'_, f64>,
    tol: f64,
    max_iter: usize,
) -> Result<ConfidenceSolution> {
    let n = op.n();
    if labels.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "T is {n}×{n} but labels have {} rows",
            labels.nrows()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tol = {tol}")));
    }
    let init = init_confidence(labels)?;
    let support = init.support;
    let mut f = init.values;
    let mut grad = op.apply(f.view());
    let mut obj = 0.5 * (&f * &grad).sum();
    let mut history = vec![obj];
    let base_step = 1.0 / op.lipschitz;
    let mut step = base_step;
    let mut scratch = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let mut cand = &f - &(&grad * step);
            for (i, (mut row, sup)) in cand
                .axis_iter_mut(Axis(0))
                .zip(support.outer_iter())
                .enumerate()
            {
                project_into(row.as_slice_mut().expect("row-major"), sup, &mut scratch)
                    .map_err(|e| e.at_row(i + 1))?;
            }
            let cand_grad = op.apply(cand.view());
            let cand_obj = 0.5 * (&cand * &cand_grad).sum();
            if cand_obj <= obj + 1e-12 {
                accepted = Some((cand, cand_grad, cand_obj));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_grad, cand_obj)) = accepted else {
            // No descent at any tried step: F is stationary to working precision.
            converged = true;
            break;
        };
        let change = (&cand - &f)
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        f = cand;
        grad = cand_grad;
        obj = cand_obj;
        history.push(obj);
        if change <= tol {
            converged = true;
            break;
        }
    }

    Ok(ConfidenceSolution {
        confidence: ConfidenceMatrix { values: f, support },
        objective: obj,
        iterations,
        converged,
        history,
    })
}
