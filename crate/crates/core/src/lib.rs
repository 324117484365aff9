//! Semi-supervised density-based clustering with integrated outlier detection.
//!
//! The crate expands clusters from user-labeled points in Prim order over the
//! reachability-distance graph, back-traces each expansion at its longest edge
//! so differently-labeled points never share a cluster, scores every point for
//! outlierness, and finally trains an instance-weighted k-nearest-neighbor
//! classifier on the reliable normals and reliable outliers to label the rest.
//!
//! Module map:
//!
//! * [`dataset`] - CSV ingestion, ground truth, seeded label sampling.
//! * [`metricspace`] - distances, core distances, reachability distances.
//! * [`expansion`] - Prim-order expansion, back-tracing, SSDBSCAN.
//! * [`scoring`] - reachability, local-density, similarity and total scores.
//! * [`model`] - reliable-set selection and the weighted kNN classifier.
//! * [`pipeline`] - end-to-end runs and cross-validated weight tuning.
//! * [`metrics`] - AUC, Rand Index, NMI.
//! * [`baselines`] - DBSCAN, k-means, LOF.
//! * [`synth`] - seeded synthetic datasets.
//! * [`cli`] - report types and the command implementations behind the binary.

pub mod baselines;
pub mod cli;
pub mod dataset;
mod error;
pub mod expansion;
pub mod metrics;
pub mod metricspace;
pub mod model;
pub mod pipeline;
pub mod scoring;
pub mod synth;

pub use dataset::{Class, Dataset, LabelSet};
pub use error::{Error, Result};
pub use expansion::{ClusterAssignment, ExpansionRecord};
pub use metricspace::NeighborhoodIndex;
pub use model::{Classifier, PipelineResult, TrainingSet};
pub use pipeline::{PipelineParams, ReliableCount, TuneReport};
pub use scoring::{ScoreParams, ScoreTable};
