//! Distance and similarity measures between label distributions, and
//! experiment-level aggregation.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn same_len(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<()> {
    if d.len() != d_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            d.len(),
            d_hat.len()
        )));
    }
    Ok(())
}

/// `max_j |d_j − d̂_j|`
pub fn chebyshev(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    Ok(d.iter()
        .zip(d_hat)
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
}

/// `sqrt(Σ (d_j − d̂_j)² / (d_j + d̂_j)²)`; terms with a zero denominator
/// contribute 0.
pub fn clark(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    let s: f64 = d
        .iter()
        .zip(d_hat)
        .map(|(a, b)| {
            let den = a + b;
            if den == 0.0 {
                0.0
            } else {
                (a - b) * (a - b) / (den * den)
            }
        })
        .sum();
    Ok(s.sqrt())
}

/// `Σ |d_j − d̂_j| / (d_j + d̂_j)`; terms with a zero denominator
/// contribute 0.
pub fn canberra(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    Ok(d.iter()
        .zip(d_hat)
        .map(|(a, b)| {
            let den = a + b;
            if den == 0.0 {
                0.0
            } else {
                (a - b).abs() / den
            }
        })
        .sum())
}

/// `Σ d_j ln(d_j / d̂_j)` with `0 · ln 0 = 0`. A positive `d_j` against a
/// zero prediction is an error rather than infinity.
pub fn kl(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    let mut s = 0.0;
    for (j, (&a, &b)) in d.iter().zip(d_hat).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b <= 0.0 {
            return Err(Error::InfiniteDivergence { index: j, value: a });
        }
        s += a * (a / b).ln();
    }
    Ok(s)
}

pub fn cosine(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    let na = d.dot(&d).sqrt();
    let nb = d_hat.dot(&d_hat).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(d.dot(&d_hat) / (na * nb))
}

/// `Σ min(d_j, d̂_j)`
pub fn intersection(d: ArrayView1<'_, f64>, d_hat: ArrayView1<'_, f64>) -> Result<f64> {
    same_len(d, d_hat)?;
    Ok(d.iter().zip(d_hat).map(|(a, b)| a.min(*b)).sum())
}

/// Mean of each measure over instances. Serializes to a flat JSON object
/// with the six measure names as keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub chebyshev: f64,
    pub clark: f64,
    pub canberra: f64,
    pub kl: f64,
    pub cosine: f64,
    pub intersection: f64,
    #[serde(skip)]
    pub n_instances: usize,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct")
    }

    /// One-line summary of the five measures commonly reported, plus
    /// intersection on request.
    pub fn table_line(&self, with_intersection: bool) -> String {
        let mut s = format!(
            "chebyshev={:.4} clark={:.4} canberra={:.4} kl={:.4} cosine={:.4}",
            self.chebyshev, self.clark, self.canberra, self.kl, self.cosine
        );
        if with_intersection {
            s.push_str(&format!(" intersection={:.4}", self.intersection));
        }
        s
    }
}

/// Averages every measure over the rows of two n × q matrices.
pub fn report(truth: ArrayView2<'_, f64>, pred: ArrayView2<'_, f64>) -> Result<MetricReport> {
    if truth.dim() != pred.dim() {
        return Err(Error::DimensionMismatch(format!(
            "truth is {:?}, prediction is {:?}",
            truth.dim(),
            pred.dim()
        )));
    }
    let n = truth.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("no instances to evaluate".into()));
    }
    let mut sums = [0.0f64; 6];
    for (i, (d, d_hat)) in truth.outer_iter().zip(pred.outer_iter()).enumerate() {
        let row = |r: Result<f64>| r.map_err(|e| e.at_row(i + 1));
        sums[0] += row(chebyshev(d, d_hat))?;
        sums[1] += row(clark(d, d_hat))?;
        sums[2] += row(canberra(d, d_hat))?;
        sums[3] += row(kl(d, d_hat))?;
        sums[4] += row(cosine(d, d_hat))?;
        sums[5] += row(intersection(d, d_hat))?;
    }
    let m = sums.map(|s| s / n as f64);
    Ok(MetricReport {
        chebyshev: m[0],
        clark: m[1],
        canberra: m[2],
        kl: m[3],
        cosine: m[4],
        intersection: m[5],
        n_instances: n,
    })
}

/// Ranks methods per dataset (1 = best, ties share the mean rank) and
/// averages the ranks over datasets. `scores[method]` holds one score per
/// dataset, in the same dataset order for every method.
pub fn average_ranks(
    scores: &BTreeMap<String, Vec<f64>>,
    higher_is_better: bool,
) -> Result<BTreeMap<String, f64>> {
    let n_datasets = scores.values().next().map_or(0, Vec::len);
    if scores.is_empty() || n_datasets == 0 {
        return Err(Error::InvalidArgument("empty score table".into()));
    }
    if scores.values().any(|v| v.len() != n_datasets) {
        return Err(Error::DimensionMismatch(
            "methods have different numbers of datasets".into(),
        ));
    }
    if scores.values().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score table cell".into()));
    }
    let methods: Vec<&String> = scores.keys().collect();
    let mut totals = vec![0.0; methods.len()];
    for ds in 0..n_datasets {
        let col: Vec<f64> = methods.iter().map(|m| scores[*m][ds]).collect();
        let mut order: Vec<usize> = (0..col.len()).collect();
        order.sort_by(|&a, &b| {
            let ord = col[a].total_cmp(&col[b]);
            if higher_is_better {
                ord.reverse()
            } else {
                ord
            }
        });
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && col[order[end]] == col[order[start]] {
                end += 1;
            }
            // positions start..end share ranks start+1..=end
            let rank = (start + 1 + end) as f64 / 2.0;
            for &m in &order[start..end] {
                totals[m] += rank;
            }
            start = end;
        }
    }
    Ok(methods
        .into_iter()
        .zip(totals)
        .map(|(m, t)| (m.clone(), t / n_datasets as f64))
        .collect())
}
