//! Experiment configuration: a flat `key = value` file whose keys double as
//! command-line flags. Flags override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lcdr::confidence::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use lcdr::hsic::{DEFAULT_ALPHA, DEFAULT_D_PRIME};
use lcdr::{SigmaMode, TrainConfig};

use crate::error::{CliError, Result};

pub const DEFAULT_K: usize = 10;

/// Which features the model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturesVariant {
    /// Standardized input features.
    Raw,
    /// HSIC projection of the standardized features.
    Reduced,
}

/// Which targets the model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetsVariant {
    /// Row-normalized logical labels.
    Logical,
    /// Solution of the confidence QP.
    Confidence,
}

impl FromStr for FeaturesVariant {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "reduced" => Ok(Self::Reduced),
            _ => Err(CliError::Config(format!("features must be raw or reduced, got {s:?}"))),
        }
    }
}

impl FromStr for TargetsVariant {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logical" => Ok(Self::Logical),
            "confidence" => Ok(Self::Confidence),
            _ => Err(CliError::Config(format!(
                "targets must be logical or confidence, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: PathBuf,
    /// Degradation threshold for distribution input; `None` means 1/q.
    pub threshold: Option<f64>,
    pub k: usize,
    pub sigma_mode: SigmaMode,
    pub alpha: f64,
    pub d_prime: usize,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    /// `train.seed` is the experiment seed.
    pub train: TrainConfig,
    pub features: FeaturesVariant,
    pub targets: TargetsVariant,
    pub out_dist: PathBuf,
    pub out_metrics: Option<PathBuf>,
    /// CSV of the reduced features and training targets.
    pub out_augmented: Option<PathBuf>,
    pub out_model: Option<PathBuf>,
    /// Adds intersection to the logged summary line.
    pub intersection: bool,
}

impl ExperimentConfig {
    /// Defaults for everything except the paths.
    pub fn new(input: impl Into<PathBuf>, out_dist: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            threshold: None,
            k: DEFAULT_K,
            sigma_mode: SigmaMode::default(),
            alpha: DEFAULT_ALPHA,
            d_prime: DEFAULT_D_PRIME,
            qp_tol: DEFAULT_TOL,
            qp_max_iter: DEFAULT_MAX_ITER,
            train: TrainConfig::default(),
            features: FeaturesVariant::Reduced,
            targets: TargetsVariant::Confidence,
            out_dist: out_dist.into(),
            out_metrics: None,
            out_augmented: None,
            out_model: None,
            intersection: false,
        }
    }

    /// Builds a config from merged settings. `input` and `out-dist` are
    /// required; every other key falls back to its default.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        for key in settings.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("unknown key {key:?}")));
            }
        }
        let required = |key: &str| {
            settings
                .get(key)
                .cloned()
                .ok_or_else(|| CliError::Config(format!("missing required key {key:?}")))
        };
        let mut cfg = Self::new(required("input")?, required("out-dist")?);
        let get = |key: &str| settings.get(key).map(String::as_str);

        if let Some(v) = get("threshold") {
            cfg.threshold = Some(parse(v, "threshold")?);
        }
        if let Some(v) = get("k") {
            cfg.k = parse(v, "k")?;
        }
        if let Some(v) = get("sigma") {
            cfg.sigma_mode = match v {
                "auto" => SigmaMode::MeanKnnDistance,
                _ => SigmaMode::Fixed(parse(v, "sigma")?),
            };
        }
        if let Some(v) = get("alpha") {
            cfg.alpha = parse(v, "alpha")?;
        }
        if let Some(v) = get("d-prime") {
            cfg.d_prime = parse(v, "d-prime")?;
        }
        if let Some(v) = get("qp-tol") {
            cfg.qp_tol = parse(v, "qp-tol")?;
        }
        if let Some(v) = get("qp-max-iter") {
            cfg.qp_max_iter = parse(v, "qp-max-iter")?;
        }
        let t = &mut cfg.train;
        if let Some(v) = get("beta") {
            t.beta = parse(v, "beta")?;
        }
        if let Some(v) = get("seed") {
            t.seed = parse(v, "seed")?;
        }
        if let Some(v) = get("learning-rate") {
            t.learning_rate = parse(v, "learning-rate")?;
        }
        if let Some(v) = get("momentum") {
            t.momentum = parse(v, "momentum")?;
        }
        if let Some(v) = get("weight-decay") {
            t.weight_decay = parse(v, "weight-decay")?;
        }
        if let Some(v) = get("batch-size") {
            t.batch_size = parse(v, "batch-size")?;
        }
        if let Some(v) = get("epochs") {
            t.max_epochs = parse(v, "epochs")?;
        }
        if let Some(v) = get("converge-tol") {
            t.converge_tol = parse(v, "converge-tol")?;
        }
        if let Some(v) = get("init-scale") {
            t.init_scale = parse(v, "init-scale")?;
        }
        if let Some(v) = get("features") {
            cfg.features = v.parse()?;
        }
        if let Some(v) = get("targets") {
            cfg.targets = v.parse()?;
        }
        cfg.out_metrics = get("out-metrics").map(PathBuf::from);
        cfg.out_augmented = get("out-augmented").map(PathBuf::from);
        cfg.out_model = get("out-model").map(PathBuf::from);
        if let Some(v) = get("intersection") {
            cfg.intersection = parse(v, "intersection")?;
        }
        Ok(cfg)
    }
}

/// Every key accepted by [`ExperimentConfig::from_settings`].
pub const KEYS: &[&str] = &[
    "input",
    "threshold",
    "k",
    "sigma",
    "alpha",
    "d-prime",
    "qp-tol",
    "qp-max-iter",
    "beta",
    "seed",
    "learning-rate",
    "momentum",
    "weight-decay",
    "batch-size",
    "epochs",
    "converge-tol",
    "init-scale",
    "features",
    "targets",
    "out-dist",
    "out-metrics",
    "out-augmented",
    "out-model",
    "intersection",
];

/// Raw key/value pairs. Keys are normalized to dashes, so `d_prime` and
/// `d-prime` are the same key.
pub type Settings = BTreeMap<String, String>;

fn parse<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("bad value {v:?} for {key}")))
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped,
/// a repeated key is an error.
pub fn parse_settings(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (no, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", no + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key:?}", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings(&text)
}
