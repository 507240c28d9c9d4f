//! Synthetic distribution datasets with a known generating model.

use std::path::Path;

use lcdr::dataset::numbered_names;
use lcdr::{save_dataset, Dataset, LabelKind};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{CliError, Result, StageExt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    /// Standard deviation of the logit noise.
    pub noise: f64,
    pub seed: u64,
}

/// `X ~ N(0, 1)`, `G ~ N(0, 1/d)` and `D = softmax(G x + ε)` row by row with
/// `ε ~ N(0, noise²)`. Scaling G by `1/√d` keeps the clean logits at unit
/// variance for any d, so distributions stay spread out instead of
/// collapsing to one-hot as d grows.
pub fn synthesize(cfg: &SynthConfig) -> Result<Dataset> {
    let SynthConfig { n, d, q, noise, seed } = *cfg;
    if n < 10 || d < 1 || q < 2 {
        return Err(CliError::Config(format!(
            "synth needs n >= 10, d >= 1, q >= 2 (got n={n}, d={d}, q={q})"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(CliError::Config(format!("noise {noise} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_simple_fn((n, d), || rng.sample::<f64, _>(StandardNormal));
    let scale = 1.0 / (d as f64).sqrt();
    let g = Array2::from_shape_simple_fn((q, d), || scale * rng.sample::<f64, _>(StandardNormal));

    let mut labels = x.dot(&g.t());
    for mut row in labels.outer_iter_mut() {
        for v in row.iter_mut() {
            *v += noise * rng.sample::<f64, _>(StandardNormal);
        }
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let e: Array1<f64> = row.mapv(|v| (v - max).exp());
        let s = e.sum();
        row.assign(&(e / s));
    }
    Dataset::new(
        x,
        labels,
        LabelKind::Distribution,
        numbered_names(d),
        numbered_names(q),
    )
    .stage("synth")
}

pub fn run_synth(cfg: &SynthConfig, output: &Path) -> Result<Dataset> {
    let data = synthesize(cfg)?;
    save_dataset(&data, output).stage("write")?;
    Ok(data)
}
