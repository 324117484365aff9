//! Command-line front end.
//!
//! Everything the binary does lives here so tests can drive the commands
//! in-process. [`execute`] returns the report text; [`main_with_args`] adds
//! argument parsing, output writing and exit codes (0 success, 1 runtime
//! error, 2 usage error).

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::dataset::{
    self, Class, Dataset, LabelSet, DEFAULT_LABEL_COLUMN, DEFAULT_OUTLIER_SENTINEL,
};
use crate::error::Error;
use crate::expansion;
use crate::metrics::{auc, nmi, rand_index};
use crate::metricspace::NeighborhoodIndex;
use crate::model::{PipelineResult, DEFAULT_KNN_K};
use crate::pipeline::{
    self, PipelineParams, ReliableCount, DEFAULT_FOLDS, DEFAULT_GRID_STEP, DEFAULT_MIN_PTS,
};
use crate::scoring::ScoreParams;
use crate::synth;

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits so printed reports re-parse to the same value.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().expect("formatted float parses")
    } else {
        x
    }
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.map(round12)
}

#[derive(Debug, Parser)]
#[command(
    name = "ssdbcodi",
    version,
    about = "Semi-supervised density-based clustering with outlier detection"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One labeled run; prints a JSON trial report.
    Run(RunArgs),
    /// Seeded trials per label fraction; prints mean/std CSV.
    Benchmark(BenchmarkArgs),
    /// Metric heatmap over the (alpha, beta) lattice; prints CSV.
    Sensitivity(SensitivityArgs),
    /// Runs a reference algorithm; prints a JSON report.
    Baseline(BaselineArgs),
    /// Prints instance/attribute/outlier/cluster counts of a CSV.
    Describe(DescribeArgs),
    /// Writes a seeded two-moons CSV with uniform background outliers.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    pub label_column: String,
    #[arg(long, default_value = DEFAULT_OUTLIER_SENTINEL)]
    pub outlier_sentinel: String,
    /// Min-max scale every feature to [0, 1] after loading.
    #[arg(long)]
    pub scale: bool,
}

impl InputArgs {
    pub fn load(&self) -> Result<Dataset, Error> {
        let ds = Dataset::load_csv(&self.input, &self.label_column, &self.outlier_sentinel)?;
        Ok(if self.scale { ds.min_max_scaled() } else { ds })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.4, value_parser = unit_interval)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.3, value_parser = unit_interval)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_PTS, value_parser = clap::value_parser!(usize))]
    pub min_pts: usize,
    /// Reliable-outlier count, or "auto" for the label-estimated contamination.
    #[arg(long, default_value = "auto", value_parser = reliable_count)]
    pub k_reliable: ReliableCount,
    /// Neighbors consulted by the weighted kNN classifier.
    #[arg(long, default_value_t = DEFAULT_KNN_K)]
    pub knn_k: usize,
    /// Draw at least one label from every true cluster.
    #[arg(long)]
    pub stratified_labels: bool,
}

impl ModelArgs {
    fn params(&self) -> Result<PipelineParams, Failure> {
        if self.alpha + self.beta > 1.0 + 1e-9 {
            return Err(Failure::Usage(format!(
                "--alpha {} plus --beta {} exceeds 1",
                self.alpha, self.beta
            )));
        }
        if self.min_pts == 0 || self.knn_k == 0 {
            return Err(Failure::Usage(
                "--min-pts and --knn-k must be positive".into(),
            ));
        }
        Ok(PipelineParams {
            score: ScoreParams {
                alpha: self.alpha,
                beta: self.beta,
                min_pts: self.min_pts,
            },
            k: self.k_reliable,
            k_c: self.knn_k,
        })
    }

    fn sample(&self, ds: &Dataset, fraction: f64, seed: u64) -> Result<LabelSet, Error> {
        if self.stratified_labels {
            dataset::sample_labels_stratified(ds, fraction, seed)
        } else {
            dataset::sample_labels(ds, fraction, seed)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// Pick alpha/beta per trial by cross-validation on the labels.
    #[arg(long)]
    pub tune: bool,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Leave wall-time fields out so reports are byte-stable.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tuning: TuneArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, default_value_t = 0.1)]
    pub label_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Include per-point predictions in the report.
    #[arg(long)]
    pub per_point: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub tuning: TuneArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Label percentages, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25", value_parser = percent)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20", value_parser = percent)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_STEP)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Dbscan,
    Kmeans,
    Lof,
    Ssdbscan,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// DBSCAN radius.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Cluster count for k-means, neighbor count for LOF.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MIN_PTS)]
    pub min_pts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.1)]
    pub label_fraction: f64,
    #[arg(long)]
    pub stratified_labels: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Normal points, split between the two moons.
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 0.06)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.05)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} must lie in [0, 1]"))
    }
}

fn percent(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 100.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie in (0, 100]"))
    }
}

fn reliable_count(s: &str) -> Result<ReliableCount, String> {
    if s.eq_ignore_ascii_case("auto") {
        Ok(ReliableCount::Auto)
    } else {
        s.parse()
            .map(ReliableCount::Fixed)
            .map_err(|_| format!("'{s}' is neither 'auto' nor a count"))
    }
}

/// Why a command failed; decides the exit code.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub alpha: f64,
    pub beta: f64,
    pub min_pts: usize,
    /// Reliable outliers actually trained on.
    pub k: usize,
    pub k_c: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointOutput {
    pub index: usize,
    pub cluster: Option<u32>,
    pub outlier: bool,
    pub outlier_score: f64,
    pub t_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub dataset: String,
    pub label_fraction: f64,
    pub seed: u64,
    pub params: ReportParams,
    /// Absent when the dataset has no true outliers (or only outliers).
    pub auc: Option<f64>,
    pub rand_index: f64,
    pub nmi: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_point: Option<Vec<PointOutput>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub schema_version: u32,
    pub dataset: String,
    pub algo: Algo,
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rand_index: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
}

/// AUC, Rand Index and NMI of predicted classes and outlier scores against
/// ground truth over all points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub auc: Option<f64>,
    pub rand_index: f64,
    pub nmi: f64,
}

pub fn evaluate(
    ds: &Dataset,
    predicted: &[Class],
    outlier_score: &[f64],
) -> Result<Evaluation, Error> {
    let truth = ds.truth();
    let positive: Vec<bool> = truth.iter().map(|c| c.is_outlier()).collect();
    let both = positive.iter().any(|&p| p) && positive.iter().any(|&p| !p);
    let auc = if both {
        Some(auc(outlier_score, &positive)?)
    } else {
        None
    };
    let rand_index = if ds.len() >= 2 {
        rand_index(predicted, truth)?
    } else {
        1.0
    };
    Ok(Evaluation {
        auc,
        rand_index,
        nmi: nmi(predicted, truth)?,
    })
}

/// Outcome of one seeded trial, before rounding.
#[derive(Clone, Debug)]
pub struct Trial {
    pub params: PipelineParams,
    pub result: PipelineResult,
    pub eval: Evaluation,
    pub millis: f64,
}

/// Samples labels, optionally tunes the weights, runs and evaluates.
pub fn run_trial(
    ds: &Dataset,
    idx: &NeighborhoodIndex,
    model: &ModelArgs,
    tuning: Option<&TuneArgs>,
    fraction: f64,
    seed: u64,
) -> Result<Trial, Failure> {
    let start = Instant::now();
    let mut params = model.params()?;
    let labels = model.sample(ds, fraction, seed)?;
    if let Some(t) = tuning.filter(|t| t.tune) {
        let report = pipeline::tune(ds, idx, &labels, &params, t.grid_step, t.folds, seed)?;
        params = params.with_weights(report.best.0, report.best.1);
    }
    let result = pipeline::run_with_index(ds, idx, &labels, &params)?;
    let eval = evaluate(ds, &result.classes(), &result.outlier_score)?;
    Ok(Trial {
        params,
        result,
        eval,
        millis: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn index_for(ds: &Dataset, min_pts: usize) -> Result<NeighborhoodIndex, Failure> {
    Ok(NeighborhoodIndex::build(ds, min_pts)?)
}

pub fn cmd_run(args: &RunArgs) -> Result<TrialReport, Failure> {
    let ds = args.input.load()?;
    let idx = index_for(&ds, args.model.min_pts)?;
    let trial = run_trial(
        &ds,
        &idx,
        &args.model,
        Some(&args.tuning),
        args.label_fraction,
        args.seed,
    )?;
    let r = &trial.result;
    let per_point = args.per_point.then(|| {
        (0..ds.len())
            .map(|i| PointOutput {
                index: i,
                cluster: r.clusters[i],
                outlier: r.outliers[i],
                outlier_score: round12(r.outlier_score[i]),
                t_score: round12(r.score_table.t_score[i]),
            })
            .collect()
    });
    Ok(TrialReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.name().to_owned(),
        label_fraction: args.label_fraction,
        seed: args.seed,
        params: ReportParams {
            alpha: trial.params.score.alpha,
            beta: trial.params.score.beta,
            min_pts: trial.params.score.min_pts,
            k: r.training.reliable_outliers().count(),
            k_c: trial.params.k_c,
        },
        auc: round_opt(trial.eval.auc),
        rand_index: round12(trial.eval.rand_index),
        nmi: round12(trial.eval.nmi),
        wall_time_ms: (!args.out.no_timing).then(|| round12(trial.millis)),
        per_point,
    })
}

/// Mean and population standard deviation; `None` for an empty sample.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| round12(v).to_string()).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub fraction: f64,
    pub auc: Option<(f64, f64)>,
    pub rand: (f64, f64),
    pub nmi: (f64, f64),
}

pub fn benchmark_rows(args: &BenchmarkArgs) -> Result<Vec<BenchmarkRow>, Failure> {
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let ds = args.input.load()?;
    let idx = index_for(&ds, args.model.min_pts)?;
    let mut rows = Vec::new();
    for &pct in &args.fractions {
        let fraction = pct / 100.0;
        let trials: Vec<Trial> = (0..args.trials)
            .into_par_iter()
            .map(|i| {
                run_trial(
                    &ds,
                    &idx,
                    &args.model,
                    Some(&args.tuning),
                    fraction,
                    args.seed + i as u64,
                )
            })
            .collect::<Result<_, _>>()?;
        let aucs: Vec<f64> = trials.iter().filter_map(|t| t.eval.auc).collect();
        let rands: Vec<f64> = trials.iter().map(|t| t.eval.rand_index).collect();
        let nmis: Vec<f64> = trials.iter().map(|t| t.eval.nmi).collect();
        rows.push(BenchmarkRow {
            fraction,
            auc: mean_std(&aucs),
            rand: mean_std(&rands).expect("trials >= 1"),
            nmi: mean_std(&nmis).expect("trials >= 1"),
        });
    }
    Ok(rows)
}

pub const BENCHMARK_HEADER: &str =
    "fraction,auc_mean,auc_std,rand_mean,rand_std,nmi_mean,nmi_std,schema_version";

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<String, Failure> {
    let mut out = String::from(BENCHMARK_HEADER);
    out.push('\n');
    for r in benchmark_rows(args)? {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            round12(r.fraction),
            cell(r.auc.map(|a| a.0)),
            cell(r.auc.map(|a| a.1)),
            cell(Some(r.rand.0)),
            cell(Some(r.rand.1)),
            cell(Some(r.nmi.0)),
            cell(Some(r.nmi.1)),
            SCHEMA_VERSION
        ));
    }
    Ok(out)
}

pub const SENSITIVITY_HEADER: &str =
    "alpha,beta,fraction,auc_mean,rand_mean,nmi_mean,schema_version";

pub fn cmd_sensitivity(args: &SensitivityArgs) -> Result<String, Failure> {
    if args.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if !pipeline::divides_unit(args.grid_step) {
        return Err(Failure::Usage(format!(
            "--grid-step {} must divide 1 evenly",
            args.grid_step
        )));
    }
    let base = args.model.params()?;
    let lattice = pipeline::weight_lattice(args.grid_step)?;
    let ds = args.input.load()?;
    let idx = index_for(&ds, args.model.min_pts)?;
    let mut out = String::from(SENSITIVITY_HEADER);
    out.push('\n');
    for &pct in &args.fractions {
        let fraction = pct / 100.0;
        // per trial: one evaluation per lattice cell
        let per_trial: Vec<Vec<Evaluation>> = (0..args.trials)
            .into_par_iter()
            .map(|i| -> Result<Vec<Evaluation>, Failure> {
                let labels = args.model.sample(&ds, fraction, args.seed + i as u64)?;
                let prepared = pipeline::prepare(&ds, &idx, &labels)?;
                lattice
                    .iter()
                    .map(|&(a, b)| {
                        let r = prepared.finish(&base.with_weights(a, b))?;
                        Ok(evaluate(&ds, &r.classes(), &r.outlier_score)?)
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        for (c, &(a, b)) in lattice.iter().enumerate() {
            let aucs: Vec<f64> = per_trial.iter().filter_map(|t| t[c].auc).collect();
            let rands: Vec<f64> = per_trial.iter().map(|t| t[c].rand_index).collect();
            let nmis: Vec<f64> = per_trial.iter().map(|t| t[c].nmi).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                round12(a),
                round12(b),
                round12(fraction),
                cell(mean_std(&aucs).map(|m| m.0)),
                cell(mean_std(&rands).map(|m| m.0)),
                cell(mean_std(&nmis).map(|m| m.0)),
                SCHEMA_VERSION
            ));
        }
    }
    Ok(out)
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<BaselineReport, Failure> {
    let ds = args.input.load()?;
    let start = Instant::now();
    let truth = ds.truth();
    let as_class = |c: Option<u32>| c.map_or(Class::Outlier, Class::Cluster);
    let clustering = |pred: &[Class]| -> Result<(f64, f64), Error> {
        Ok((rand_index(pred, truth)?, nmi(pred, truth)?))
    };
    let positive: Vec<bool> = truth.iter().map(|c| c.is_outlier()).collect();
    let score_auc = |s: &[f64]| -> Result<Option<f64>, Error> {
        if positive.iter().any(|&p| p) && positive.iter().any(|&p| !p) {
            Ok(Some(auc(s, &positive)?))
        } else {
            Ok(None)
        }
    };
    let (params, auc_v, ri, nm) = match args.algo {
        Algo::Dbscan => {
            let eps = args
                .epsilon
                .ok_or_else(|| Failure::Usage("--algo dbscan needs --epsilon".into()))?;
            let idx = NeighborhoodIndex::build(&ds, 1)?;
            let labels = baselines::dbscan(&idx, eps, args.min_pts)?;
            let pred: Vec<Class> = labels.iter().map(|&c| as_class(c)).collect();
            let noise: Vec<f64> = labels
                .iter()
                .map(|c| if c.is_none() { 1.0 } else { 0.0 })
                .collect();
            let (ri, nm) = clustering(&pred)?;
            (
                serde_json::json!({ "epsilon": eps, "min_pts": args.min_pts }),
                score_auc(&noise)?,
                Some(ri),
                Some(nm),
            )
        }
        Algo::Kmeans => {
            let k = args
                .k
                .ok_or_else(|| Failure::Usage("--algo kmeans needs --k".into()))?;
            let fit = baselines::kmeans(&ds, k, args.seed, args.max_iter)?;
            let pred: Vec<Class> = fit.assignment.iter().map(|&c| Class::Cluster(c)).collect();
            let (ri, nm) = clustering(&pred)?;
            (
                serde_json::json!({ "k": k, "seed": args.seed, "max_iter": args.max_iter }),
                None,
                Some(ri),
                Some(nm),
            )
        }
        Algo::Lof => {
            let k = args
                .k
                .ok_or_else(|| Failure::Usage("--algo lof needs --k".into()))?;
            let idx = NeighborhoodIndex::build(&ds, 1)?;
            let scores = baselines::lof(&idx, k)?;
            (
                serde_json::json!({ "k": k }),
                score_auc(&scores)?,
                None,
                None,
            )
        }
        Algo::Ssdbscan => {
            let idx = NeighborhoodIndex::build(&ds, args.min_pts)?;
            let labels = if args.stratified_labels {
                dataset::sample_labels_stratified(&ds, args.label_fraction, args.seed)?
            } else {
                dataset::sample_labels(&ds, args.label_fraction, args.seed)?
            };
            let assignment = expansion::ssdbscan(&idx, &labels)?;
            let filled = expansion::assign_unclustered_to_nearest(&idx, &assignment);
            let pred: Vec<Class> = filled.as_slice().iter().map(|&c| as_class(c)).collect();
            let (ri, nm) = clustering(&pred)?;
            (
                serde_json::json!({
                    "min_pts": args.min_pts,
                    "label_fraction": args.label_fraction,
                    "seed": args.seed,
                }),
                None,
                Some(ri),
                Some(nm),
            )
        }
    };
    Ok(BaselineReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.name().to_owned(),
        algo: args.algo,
        params,
        auc: round_opt(auc_v),
        rand_index: round_opt(ri),
        nmi: round_opt(nm),
        wall_time_ms: (!args.out.no_timing).then(|| round12(start.elapsed().as_secs_f64() * 1e3)),
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String, Failure> {
    let ds = synth::two_moons(args.n, args.noise, args.outlier_fraction, args.seed)?;
    Ok(to_csv(&ds))
}

/// Writes a dataset as `x0,...,x{d-1},label` CSV with "o" for outliers.
pub fn to_csv(ds: &Dataset) -> String {
    let mut out: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
    out.push(DEFAULT_LABEL_COLUMN.to_owned());
    let mut text = out.join(",");
    text.push('\n');
    for (p, c) in ds.points().zip(ds.truth()) {
        for v in p {
            text.push_str(&format!("{v},"));
        }
        match c {
            Class::Cluster(id) => text.push_str(&format!("c{id}\n")),
            Class::Outlier => text.push_str(&format!("{DEFAULT_OUTLIER_SENTINEL}\n")),
        }
    }
    text
}

/// Runs a parsed command and returns the report text.
pub fn execute(cli: &Cli) -> Result<String, Failure> {
    let work = || -> Result<String, Failure> {
        match &cli.command {
            Command::Run(a) => {
                Ok(serde_json::to_string_pretty(&cmd_run(a)?).map_err(Error::from)? + "\n")
            }
            Command::Benchmark(a) => cmd_benchmark(a),
            Command::Sensitivity(a) => cmd_sensitivity(a),
            Command::Baseline(a) => {
                Ok(serde_json::to_string_pretty(&cmd_baseline(a)?).map_err(Error::from)? + "\n")
            }
            Command::Describe(a) => {
                let s = a.input.load()?.summary();
                Ok(serde_json::to_string_pretty(&s).map_err(Error::from)? + "\n")
            }
            Command::Synth(a) => cmd_synth(a),
        }
    };
    match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn output_path(cli: &Cli) -> Option<&PathBuf> {
    match &cli.command {
        Command::Run(a) => a.out.output.as_ref(),
        Command::Benchmark(a) => a.out.output.as_ref(),
        Command::Sensitivity(a) => a.out.output.as_ref(),
        Command::Baseline(a) => a.out.output.as_ref(),
        Command::Describe(a) => a.output.as_ref(),
        Command::Synth(a) => a.output.as_ref(),
    }
}

/// Parses, executes and writes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let text = match execute(&cli) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {f}");
            return f.exit_code();
        }
    };
    match output_path(&cli) {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(0.0), 0.0);
        let x = round12(2.0f64.sqrt());
        assert_eq!(x.to_string().parse::<f64>().unwrap(), x);
    }

    #[test]
    fn mean_std_population() {
        assert_eq!(mean_std(&[2.0]), Some((2.0, 0.0)));
        assert_eq!(mean_std(&[1.0, 3.0]), Some((2.0, 1.0)));
        assert_eq!(mean_std(&[]), None);
    }

    #[test]
    fn flag_parsers() {
        assert!(unit_interval("1.5").is_err());
        assert_eq!(unit_interval("0.25"), Ok(0.25));
        assert_eq!(reliable_count("AUTO"), Ok(ReliableCount::Auto));
        assert_eq!(reliable_count("7"), Ok(ReliableCount::Fixed(7)));
        assert!(reliable_count("x").is_err());
        assert!(percent("0").is_err());
        assert_eq!(percent(" 10"), Ok(10.0));
    }

    #[test]
    fn csv_round_trip() {
        let ds = synth::two_moons(10, 0.05, 0.2, 1).unwrap();
        let back =
            Dataset::from_csv_reader("two_moons", to_csv(&ds).as_bytes(), "label", "o").unwrap();
        assert_eq!(back, ds);
    }
}
