//! Label enhancement: recover per-instance label distributions from binary
//! logical labels.
//!
//! The pipeline has three stages:
//!
//! 1. [`confidence`]: a graph-smoothness quadratic program over a k-NN
//!    graph ([`graph`]) turns logical labels into a label-confidence matrix
//!    supported on each instance's positive labels.
//! 2. [`hsic`]: a linear projection of the features that maximizes HSIC
//!    dependence with the label confidence.
//! 3. [`model`]: a `softmax(ReLU(W x))` regressor fit on the reduced
//!    features and confidence, whose outputs are the recovered
//!    distributions.
//!
//! [`dataset`] handles CSV I/O and degradation of distributions into
//! logical labels; [`metrics`] scores recovered distributions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confidence;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod hsic;
pub mod linalg;
pub mod metrics;
pub mod model;

pub use confidence::{
    build_smoother, init_confidence, project_restricted_simplex, solve_confidence,
    ConfidenceMatrix, ConfidenceSolution, SmoothingOperator,
};
pub use dataset::{degrade, load_dataset, load_labels, save_dataset, save_distribution, Dataset, LabelKind, LabelTable};
pub use error::{Error, ErrorClass, Result};
pub use graph::{build_graph, pairwise_sq_dists, NeighborGraph, SigmaMode};
pub use hsic::{centering_matrix, hsic_value, label_kernel, project, solve_projection, KernelPair, Projection};
pub use metrics::{average_ranks, report, MetricReport};
pub use model::{train, LeModel, TrainConfig, TrainReport};
