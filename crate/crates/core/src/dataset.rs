//! Label distribution datasets: CSV loading, validation, degradation to
//! logical labels and serialization.
//!
//! Instances are rows. A file has a single header line; feature columns are
//! named `x_<name>` and label columns `y_<name>`. Values are written with
//! Rust's shortest round-trip float formatting, so a save/load cycle is
//! lossless.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row sums of a distribution matrix must be within this of 1 on load.
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-9;

/// Looser row-sum tolerance accepted by [`save_distribution`], which mostly
/// receives solver and model output.
pub const SAVE_SUM_TOL: f64 = 1e-6;

pub const FEATURE_PREFIX: &str = "x_";
pub const LABEL_PREFIX: &str = "y_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Distribution,
    Logical,
}

impl std::fmt::Display for LabelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelKind::Distribution => f.write_str("distribution"),
            LabelKind::Logical => f.write_str("logical"),
        }
    }
}

/// Feature matrix (n × d) paired with a label matrix (n × q).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array2<f64>,
    pub label_kind: LabelKind,
    /// Column names without the `x_` prefix.
    pub feature_names: Vec<String>,
    /// Column names without the `y_` prefix.
    pub label_names: Vec<String>,
}

/// Label columns of a file, without features. Used for prediction files and
/// for evaluation, which never needs the features.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub values: Array2<f64>,
    pub names: Vec<String>,
    pub kind: LabelKind,
}

impl Dataset {
    /// Validates all invariants and builds the dataset.
    pub fn new(
        features: Array2<f64>,
        labels: Array2<f64>,
        label_kind: LabelKind,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        let (nl, q) = labels.dim();
        if n != nl {
            return Err(Error::DimensionMismatch(format!(
                "{n} feature rows but {nl} label rows"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 instances, got {n}"
            )));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("need at least 1 feature".into()));
        }
        if feature_names.len() != d || label_names.len() != q {
            return Err(Error::DimensionMismatch(
                "column names do not match matrix widths".into(),
            ));
        }
        for (i, row) in features.outer_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidRow {
                    row: i + 1,
                    message: format!("feature {} is not finite", feature_names[j]),
                });
            }
        }
        validate_labels(labels.view(), label_kind)?;
        Ok(Self {
            features,
            labels,
            label_kind,
            feature_names,
            label_names,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }
}

/// Infers the label kind: every entry in {0, 1} means logical.
pub fn infer_kind(labels: ArrayView2<'_, f64>) -> LabelKind {
    if labels.iter().all(|&v| v == 0.0 || v == 1.0) {
        LabelKind::Logical
    } else {
        LabelKind::Distribution
    }
}

/// Checks the label invariants for `kind`, reporting the first offending
/// row (1-based).
pub fn validate_labels(labels: ArrayView2<'_, f64>, kind: LabelKind) -> Result<()> {
    let q = labels.ncols();
    if q < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 labels, got {q}"
        )));
    }
    for (i, row) in labels.outer_iter().enumerate() {
        let row_no = i + 1;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRow {
                row: row_no,
                message: "has a non-finite label value".into(),
            });
        }
        match kind {
            LabelKind::Distribution => {
                if let Some(v) = row.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::InvalidRow {
                        row: row_no,
                        message: format!("has label value {v} outside [0, 1]"),
                    });
                }
                let sum: f64 = row.sum();
                if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
                    return Err(Error::InvalidRow {
                        row: row_no,
                        message: format!("sums to {sum}"),
                    });
                }
            }
            LabelKind::Logical => {
                if let Some(v) = row.iter().find(|&&v| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidRow {
                        row: row_no,
                        message: format!("has non-binary logical label {v}"),
                    });
                }
                if row.iter().all(|&v| v == 0.0) {
                    return Err(Error::InvalidRow {
                        row: row_no,
                        message: "has no positive logical label".into(),
                    });
                }
            }
        }
    }
    Ok(())
}

struct RawTable {
    feature_names: Vec<String>,
    label_names: Vec<String>,
    features: Array2<f64>,
    labels: Array2<f64>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader
        .headers()
        .map_err(|e| parse_err(format!("bad header: {e}")))?
        .clone();
    let mut feature_cols = Vec::new();
    let mut label_cols = Vec::new();
    let mut feature_names = Vec::new();
    let mut label_names = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if let Some(rest) = name.strip_prefix(FEATURE_PREFIX) {
            feature_cols.push(c);
            feature_names.push(rest.to_string());
        } else if let Some(rest) = name.strip_prefix(LABEL_PREFIX) {
            label_cols.push(c);
            label_names.push(rest.to_string());
        } else {
            return Err(parse_err(format!(
                "column {name:?} has neither the {FEATURE_PREFIX} nor the {LABEL_PREFIX} prefix"
            )));
        }
    }

    let width = header.len();
    let mut feat = Vec::new();
    let mut lab = Vec::new();
    let mut n = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| Error::InvalidRow {
            row: row_no,
            message: format!("is malformed: {e}"),
        })?;
        if record.len() != width {
            return Err(Error::InvalidRow {
                row: row_no,
                message: format!("has {} fields, expected {width}", record.len()),
            });
        }
        let parse = |c: usize| -> Result<f64> {
            record[c].parse::<f64>().map_err(|_| Error::InvalidRow {
                row: row_no,
                message: format!("field {:?} is not a number", &record[c]),
            })
        };
        for &c in &feature_cols {
            feat.push(parse(c)?);
        }
        for &c in &label_cols {
            lab.push(parse(c)?);
        }
        n += 1;
    }

    let features = Array2::from_shape_vec((n, feature_cols.len()), feat)
        .expect("row-major feature buffer");
    let labels =
        Array2::from_shape_vec((n, label_cols.len()), lab).expect("row-major label buffer");
    Ok(RawTable {
        feature_names,
        label_names,
        features,
        labels,
    })
}

fn resolve_kind(labels: ArrayView2<'_, f64>, expected: Option<LabelKind>) -> Result<LabelKind> {
    let kind = expected.unwrap_or_else(|| infer_kind(labels));
    validate_labels(labels, kind)?;
    Ok(kind)
}

/// Loads and validates a dataset. With `expected = None` the label kind is
/// inferred; otherwise the labels must satisfy the expected kind's
/// invariants (a one-hot matrix is a valid distribution).
pub fn load_dataset(path: impl AsRef<Path>, expected: Option<LabelKind>) -> Result<Dataset> {
    let path = path.as_ref();
    let raw = read_table(path)?;
    if raw.label_names.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("no {LABEL_PREFIX} columns"),
        });
    }
    let kind = resolve_kind(raw.labels.view(), expected)?;
    Dataset::new(
        raw.features,
        raw.labels,
        kind,
        raw.feature_names,
        raw.label_names,
    )
}

/// Loads only the `y_` columns of a file; `x_` columns are skipped.
pub fn load_labels(path: impl AsRef<Path>, expected: Option<LabelKind>) -> Result<LabelTable> {
    let path = path.as_ref();
    let raw = read_table(path)?;
    if raw.label_names.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("no {LABEL_PREFIX} columns"),
        });
    }
    let kind = resolve_kind(raw.labels.view(), expected)?;
    Ok(LabelTable {
        values: raw.labels,
        names: raw.label_names,
        kind,
    })
}

/// Applies `l = 1 iff d > threshold` entrywise, then sets the first argmax
/// of every row to 1 so no row is left empty.
pub fn threshold_labels(dist: ArrayView2<'_, f64>, threshold: f64) -> Array2<f64> {
    let mut out = dist.mapv(|v| if v > threshold { 1.0 } else { 0.0 });
    for (src, mut dst) in dist.outer_iter().zip(out.outer_iter_mut()) {
        let mut best = 0;
        for (j, &v) in src.iter().enumerate() {
            if v > src[best] {
                best = j;
            }
        }
        dst[best] = 1.0;
    }
    out
}

/// Degrades a distribution dataset to logical labels.
pub fn degrade(data: &Dataset, threshold: f64) -> Result<Dataset> {
    if data.label_kind != LabelKind::Distribution {
        return Err(Error::InvalidArgument(
            "degrade expects a distribution dataset".into(),
        ));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} is outside (0, 1)"
        )));
    }
    Ok(Dataset {
        features: data.features.clone(),
        labels: threshold_labels(data.labels.view(), threshold),
        label_kind: LabelKind::Logical,
        feature_names: data.feature_names.clone(),
        label_names: data.label_names.clone(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_rows(
    path: &Path,
    header: Vec<String>,
    blocks: &[ArrayView2<'_, f64>],
) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = create(path)?;
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let n = blocks.first().map_or(0, |b| b.nrows());
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for block in blocks {
            for v in block.row(i) {
                if !line.is_empty() {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes a label distribution matrix as a label-only CSV.
pub fn save_distribution(
    dist: ArrayView2<'_, f64>,
    label_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    if label_names.len() != dist.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} label names for {} columns",
            label_names.len(),
            dist.ncols()
        )));
    }
    for (i, row) in dist.axis_iter(Axis(0)).enumerate() {
        let sum = row.sum();
        if !sum.is_finite() || (sum - 1.0).abs() > SAVE_SUM_TOL {
            return Err(Error::InvalidRow {
                row: i + 1,
                message: format!("sums to {sum}, not a distribution"),
            });
        }
    }
    let header = label_names
        .iter()
        .map(|s| format!("{LABEL_PREFIX}{s}"))
        .collect();
    write_rows(path.as_ref(), header, &[dist])
}

/// Writes features and labels of a dataset.
pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let header = data
        .feature_names
        .iter()
        .map(|s| format!("{FEATURE_PREFIX}{s}"))
        .chain(data.label_names.iter().map(|s| format!("{LABEL_PREFIX}{s}")))
        .collect();
    write_rows(
        path.as_ref(),
        header,
        &[data.features.view(), data.labels.view()],
    )
}

/// Default column names `1..=count`.
pub fn numbered_names(count: usize) -> Vec<String> {
    (1..=count).map(|i| i.to_string()).collect()
}
