//! The enhancement pipeline and the smaller subcommands built on it.

use std::path::Path;
use std::time::Instant;

use lcdr::dataset::numbered_names;
use lcdr::{
    build_graph, build_smoother, load_dataset, load_labels, project, report, save_dataset,
    save_distribution, solve_confidence, solve_projection, train, Dataset, LabelKind, LeModel,
    MetricReport, TrainReport,
};
use log::{info, warn};
use ndarray::{Array2, ArrayView2, Axis};

use crate::config::{ExperimentConfig, FeaturesVariant, TargetsVariant};
use crate::error::{CliError, Result, StageExt};

/// Column-wise z-scores with the population standard deviation. Constant
/// columns become zero.
pub fn standardize(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    let mut out = x.to_owned();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
        let sd = (col.dot(&col) / n).sqrt();
        if sd > 1e-12 * (1.0 + mean.abs()) {
            col.mapv_inplace(|v| v / sd);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Divides each row by its sum; rows of a valid logical matrix never sum to 0.
pub fn normalize_rows(l: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = l.to_owned();
    for mut row in out.outer_iter_mut() {
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    out
}

/// Everything a single enhancement run produces.
#[derive(Debug, Clone)]
pub struct Enhanced {
    pub logical: Array2<f64>,
    /// Training targets: confidence or normalized logical labels.
    pub targets: Array2<f64>,
    /// Features the model was trained on.
    pub features: Array2<f64>,
    pub training: TrainReport,
    pub recovered: Array2<f64>,
    /// Present when the input held ground-truth distributions.
    pub report: Option<MetricReport>,
}

impl Enhanced {
    pub fn model(&self) -> &LeModel {
        &self.training.model
    }
}

fn timed<T>(stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    info!("{stage}: {:.3}s", start.elapsed().as_secs_f64());
    Ok(out)
}

/// Logical labels for the data and, for distribution input, the truth.
fn split_labels(data: &Dataset, threshold: Option<f64>) -> Result<(Array2<f64>, Option<Array2<f64>>)> {
    match data.label_kind {
        LabelKind::Logical => {
            if threshold.is_some() {
                warn!("logical input: threshold ignored");
            }
            Ok((data.labels.clone(), None))
        }
        LabelKind::Distribution => {
            let t = threshold.unwrap_or(1.0 / data.n_labels() as f64);
            let logical = lcdr::degrade(data, t).stage("degrade")?;
            Ok((logical.labels, Some(data.labels.clone())))
        }
    }
}

/// Training targets for standardized features `x` and logical labels.
pub fn training_targets(
    x: ArrayView2<'_, f64>,
    logical: ArrayView2<'_, f64>,
    cfg: &ExperimentConfig,
) -> Result<Array2<f64>> {
    match cfg.targets {
        TargetsVariant::Logical => Ok(normalize_rows(logical)),
        TargetsVariant::Confidence => {
            let graph = timed("graph", || build_graph(x, cfg.k, cfg.sigma_mode).stage("graph"))?;
            info!("graph: k={} sigma={:.6}", graph.k, graph.sigma);
            let op = build_smoother(&graph).stage("confidence")?;
            let sol = timed("confidence", || {
                solve_confidence(&op, logical, cfg.qp_tol, cfg.qp_max_iter).stage("confidence")
            })?;
            if !sol.converged {
                warn!("confidence: no convergence after {} iterations", sol.iterations);
            }
            info!("confidence: objective={:.6e} iterations={}", sol.objective, sol.iterations);
            Ok(sol.confidence.values)
        }
    }
}

/// Runs the pipeline in memory. Ground truth, when the dataset holds
/// distributions, is only touched after the model has produced its output.
pub fn enhance(data: &Dataset, cfg: &ExperimentConfig) -> Result<Enhanced> {
    let x = standardize(data.features.view());
    let (logical, truth) = split_labels(data, cfg.threshold)?;
    let targets = training_targets(x.view(), logical.view(), cfg)?;

    let features = match cfg.features {
        FeaturesVariant::Raw => x,
        FeaturesVariant::Reduced => timed("projection", || {
            let d_prime = cfg.d_prime.min(x.ncols());
            if d_prime < cfg.d_prime {
                warn!("projection: d' = {} clamped to d = {d_prime}", cfg.d_prime);
            }
            let f_tilde = targets.dot(&targets.t());
            let proj = solve_projection(x.view(), f_tilde.view(), cfg.alpha, d_prime)
                .stage("projection")?;
            project(x.view(), &proj).stage("projection")
        })?,
    };

    let training = timed("train", || {
        train(features.view(), targets.view(), &cfg.train).stage("train")
    })?;
    info!(
        "train: {} epochs, final loss {:.6e}, converged={}",
        training.epoch_losses.len(),
        training.epoch_losses.last().copied().unwrap_or(f64::NAN),
        training.converged
    );
    let recovered = training.model.recover(features.view()).stage("recover")?;

    let report = match truth {
        Some(t) => Some(report(t.view(), recovered.view()).stage("evaluate")?),
        None => None,
    };
    Ok(Enhanced {
        logical,
        targets,
        features,
        training,
        recovered,
        report,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads the input, runs [`enhance`] and writes every requested output.
pub fn run_enhance(cfg: &ExperimentConfig) -> Result<Enhanced> {
    let data = load_dataset(&cfg.input, None).stage("load")?;
    info!(
        "load: {} instances, {} features, {} labels ({})",
        data.n_instances(),
        data.n_features(),
        data.n_labels(),
        data.label_kind
    );
    let out = enhance(&data, cfg)?;

    save_distribution(out.recovered.view(), &data.label_names, &cfg.out_dist).stage("write")?;
    if let Some(path) = &cfg.out_augmented {
        let aug = Dataset::new(
            out.features.clone(),
            out.targets.clone(),
            LabelKind::Distribution,
            numbered_names(out.features.ncols()),
            data.label_names.clone(),
        )
        .stage("write")?;
        save_dataset(&aug, path).stage("write")?;
    }
    if let Some(path) = &cfg.out_model {
        out.model().save(path).stage("write")?;
    }
    match (&out.report, &cfg.out_metrics) {
        (Some(r), Some(path)) => {
            write_text(path, &r.to_json())?;
            info!("{}", r.table_line(cfg.intersection));
        }
        (Some(r), None) => info!("{}", r.table_line(cfg.intersection)),
        (None, Some(_)) => warn!("logical input has no ground truth: no metrics written"),
        (None, None) => {}
    }
    Ok(out)
}

/// Degrades a distribution dataset and writes the logical one.
pub fn run_degrade(input: &Path, threshold: Option<f64>, output: &Path) -> Result<()> {
    let data = load_dataset(input, Some(LabelKind::Distribution)).stage("load")?;
    let t = threshold.unwrap_or(1.0 / data.n_labels() as f64);
    let logical = lcdr::degrade(&data, t).stage("degrade")?;
    save_dataset(&logical, output).stage("write")
}

/// Scores predicted against true distributions, writes the JSON report if
/// asked and returns it.
pub fn run_eval(pred: &Path, truth: &Path, output: Option<&Path>) -> Result<MetricReport> {
    let p = load_labels(pred, Some(LabelKind::Distribution)).stage("load")?;
    let t = load_labels(truth, Some(LabelKind::Distribution)).stage("load")?;
    if p.names != t.names {
        warn!("label names differ between prediction and truth; comparing by position");
    }
    let r = report(t.values.view(), p.values.view()).stage("evaluate")?;
    if let Some(path) = output {
        write_text(path, &r.to_json())?;
    }
    Ok(r)
}
