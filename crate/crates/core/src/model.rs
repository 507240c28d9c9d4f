//! Nonlinear label enhancement model `f(x̃) = softmax(ReLU(W x̃))` trained
//! on (reduced features, label confidence) pairs.
//!
//! The training objective is
//!
//! ```text
//! Σ_i ‖f_i − softmax(ReLU(W x̃_i))‖² + β ‖W‖²_F
//! ```
//!
//! with a single weight matrix W (q × d′) shared by all instances and no
//! bias. Training runs mini-batch SGD with momentum and weight decay on the
//! per-instance average of the objective: a batch B contributes
//! `(1/|B|) Σ_{i∈B} ℓ_i + (β/n) ‖W‖²_F`, an unbiased estimate of the full
//! objective divided by n.
//!
//! Randomness comes from ChaCha8 seeded with `TrainConfig::seed`: stream 0
//! draws the initial weights, stream 1 the per-epoch shuffles.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LeModel {
    /// q × d′.
    pub weights: Array2<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub beta: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Training stops once the epoch-mean loss changes by at most this.
    pub converge_tol: f64,
    /// Initial weights are uniform in `[-init_scale, init_scale]`; zero
    /// starts from W = 0.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            beta: 0.1,
            batch_size: 32,
            max_epochs: 500,
            converge_tol: 1e-6,
            init_scale: 0.01,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be > 0", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} must be in [0, 1)", self.momentum));
        }
        if !(self.weight_decay >= 0.0) || !(self.beta >= 0.0) {
            return bad("weight decay and beta must be >= 0".into());
        }
        if self.batch_size < 1 {
            return bad("batch size must be >= 1".into());
        }
        if !(self.converge_tol >= 0.0) || !(self.init_scale >= 0.0) {
            return bad("converge_tol and init_scale must be >= 0".into());
        }
        Ok(())
    }
}

fn softmax_in_place(z: &mut Array1<f64>) {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    z.mapv_inplace(|v| (v - max).exp());
    let sum = z.sum();
    *z /= sum;
}

/// Pre-activations, ReLU mask and output for one instance.
struct Pass {
    active: Vec<bool>,
    out: Array1<f64>,
}

impl LeModel {
    pub fn zeros(q: usize, d_prime: usize, beta: f64) -> Self {
        Self {
            weights: Array2::zeros((q, d_prime)),
            beta,
        }
    }

    pub fn q(&self) -> usize {
        self.weights.nrows()
    }

    pub fn d_prime(&self) -> usize {
        self.weights.ncols()
    }

    fn pass(&self, x: ArrayView1<'_, f64>) -> Pass {
        let z = self.weights.dot(&x);
        let active: Vec<bool> = z.iter().map(|&v| v > 0.0).collect();
        let mut a = z.mapv(|v| v.max(0.0));
        softmax_in_place(&mut a);
        Pass { active, out: a }
    }

    /// `softmax(ReLU(W x̃))`.
    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.d_prime() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.d_prime()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input".into()));
        }
        Ok(self.pass(x).out)
    }

    fn check(&self, x: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.d_prime() || f.ncols() != self.q() || x.nrows() != f.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "model is {}×{}, features {:?}, targets {:?}",
                self.q(),
                self.d_prime(),
                x.dim(),
                f.dim()
            )));
        }
        Ok(())
    }

    /// Full objective `Σ_i ‖f_i − ŷ_i‖² + β ‖W‖²_F`.
    pub fn loss(&self, x: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> Result<f64> {
        self.check(x, f)?;
        let data: f64 = x
            .outer_iter()
            .zip(f.outer_iter())
            .map(|(xi, fi)| sample_loss(&self.pass(xi).out, fi))
            .sum();
        Ok(data + self.beta * self.weights.iter().map(|w| w * w).sum::<f64>())
    }

    /// Gradient of [`LeModel::loss`] with respect to W. The ReLU
    /// subgradient at zero is taken as 0.
    pub fn gradient(&self, x: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(x, f)?;
        let mut grad = &self.weights * (2.0 * self.beta);
        self.accumulate_data_gradient(x, f, 0..x.nrows(), 1.0, &mut grad);
        Ok(grad)
    }

    /// Adds `scale · ∂ℓ_i/∂W` for every `i` in `rows`; returns the summed
    /// data loss of those rows.
    fn accumulate_data_gradient(
        &self,
        x: ArrayView2<'_, f64>,
        f: ArrayView2<'_, f64>,
        rows: impl IntoIterator<Item = usize>,
        scale: f64,
        grad: &mut Array2<f64>,
    ) -> f64 {
        let mut total = 0.0;
        for i in rows {
            let xi = x.row(i);
            let fi = f.row(i);
            let Pass { active, out } = self.pass(xi);
            total += sample_loss(&out, fi);
            // dℓ/dp = 2 (p − f); softmax Jacobian gives p ⊙ (g − ⟨p, g⟩).
            let g: Array1<f64> = (&out - &fi) * 2.0;
            let pg = out.dot(&g);
            for (r, mut grow) in grad.outer_iter_mut().enumerate() {
                if active[r] {
                    let dz = out[r] * (g[r] - pg);
                    grow.scaled_add(scale * dz, &xi);
                }
            }
        }
        total
    }

    /// Recovered label distributions, one row per instance.
    pub fn recover(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.d_prime() {
            return Err(Error::DimensionMismatch(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.d_prime()
            )));
        }
        let mut out = Array2::zeros((x.nrows(), self.q()));
        for (xi, mut row) in x.outer_iter().zip(out.outer_iter_mut()) {
            row.assign(&self.forward(xi)?);
        }
        Ok(out)
    }

    /// Writes the weights as CSV. The first line records `q`, `d'` and
    /// `beta`; each following line is one row of W.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "# q={},d_prime={},beta={}", self.q(), self.d_prime(), self.beta).map_err(io)?;
        for row in self.weights.outer_iter() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(",")).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| perr("empty file".into()))?
            .map_err(|e| perr(e.to_string()))?;
        let fields = header
            .strip_prefix("# ")
            .ok_or_else(|| perr("missing header".into()))?;
        let (mut q, mut d, mut beta) = (None, None, None);
        for kv in fields.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| perr(format!("bad header field {kv:?}")))?;
            match k.trim() {
                "q" => q = v.trim().parse::<usize>().ok(),
                "d_prime" => d = v.trim().parse::<usize>().ok(),
                "beta" => beta = v.trim().parse::<f64>().ok(),
                other => return Err(perr(format!("unknown header key {other:?}"))),
            }
        }
        let (q, d, beta) = match (q, d, beta) {
            (Some(q), Some(d), Some(b)) => (q, d, b),
            _ => return Err(perr("header must set q, d_prime and beta".into())),
        };
        let mut values = Vec::with_capacity(q * d);
        for (r, line) in lines.enumerate() {
            let line = line.map_err(|e| perr(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            for tok in line.split(',') {
                values.push(
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| perr(format!("weight row {}: bad value {tok:?}", r + 1)))?,
                );
            }
        }
        let weights = Array2::from_shape_vec((q, d), values)
            .map_err(|_| perr(format!("expected {q}×{d} weights")))?;
        Ok(Self { weights, beta })
    }
}

fn sample_loss(out: &Array1<f64>, f: ArrayView1<'_, f64>) -> f64 {
    out.iter().zip(f).map(|(p, t)| (t - p) * (t - p)).sum()
}

/// Per-epoch record of [`train`].
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: LeModel,
    /// Mean batch objective of each epoch.
    pub epoch_losses: Vec<f64>,
    pub converged: bool,
}

/// Mini-batch SGD with momentum and weight decay:
/// `v ← μ v + (∇ + λ W)`, `W ← W − η v`.
pub fn train(x: ArrayView2<'_, f64>, f: ArrayView2<'_, f64>, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let (n, d_prime) = x.dim();
    if n < 1 {
        return Err(Error::InvalidArgument("no training instances".into()));
    }
    if f.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} feature rows but {} target rows",
            f.nrows()
        )));
    }
    if x.iter().chain(f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }
    let q = f.ncols();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(INIT_STREAM);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);

    let mut model = LeModel::zeros(q, d_prime, cfg.beta);
    if cfg.init_scale > 0.0 {
        let s = cfg.init_scale;
        model
            .weights
            .mapv_inplace(|_| init_rng.random_range(-s..=s));
    }

    let mut velocity = Array2::<f64>::zeros((q, d_prime));
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::new();
    let mut converged = false;
    let reg_scale = cfg.beta / n as f64;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let inv = 1.0 / batch.len() as f64;
            let mut grad = &model.weights * (2.0 * reg_scale + cfg.weight_decay);
            let data = model.accumulate_data_gradient(x, f, batch.iter().copied(), inv, &mut grad);
            let reg = reg_scale * model.weights.iter().map(|w| w * w).sum::<f64>();
            epoch_loss += data * inv + reg;
            batches += 1;

            velocity *= cfg.momentum;
            velocity += &grad;
            model.weights.scaled_add(-cfg.learning_rate, &velocity);
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        let previous = epoch_losses.last().copied();
        epoch_losses.push(mean);
        if let Some(prev) = previous {
            if (prev - mean).abs() <= cfg.converge_tol {
                converged = true;
                break;
            }
        }
    }

    Ok(TrainReport {
        model,
        epoch_losses,
        converged,
    })
}
