//! End-to-end runs and cross-validated tuning of the score weights.
//!
//! A run has two stages. [`prepare`] does the label-dependent work that does
//! not depend on the score weights: expansions from every labeled normal,
//! back-traced clusters and the three component scores. [`Prepared::finish`]
//! then blends the scores, picks the reliable outliers, trains the classifier
//! and predicts every point. Tuning and sensitivity sweeps reuse one prepared
//! stage across all weight pairs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::expansion::{assign_from_records, emax_over_roots, expand_all, ClusterAssignment};
use crate::metrics::{auc, rand_index};
use crate::metricspace::NeighborhoodIndex;
use crate::model::{
    default_reliable_count, select_reliable, Classifier, PipelineResult, DEFAULT_KNN_K,
};
use crate::scoring::{ScoreParams, ScoreTable};

pub const DEFAULT_MIN_PTS: usize = 3;
pub const DEFAULT_GRID_STEP: f64 = 0.1;
pub const DEFAULT_FOLDS: usize = 5;
const LATTICE_SLACK: f64 = 1e-9;

/// How many reliable outliers to train on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliableCount {
    /// Labeled outlier share of `n`, or 5% without labeled outliers.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub score: ScoreParams,
    pub k: ReliableCount,
    pub k_c: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            score: ScoreParams {
                alpha: 0.4,
                beta: 0.3,
                min_pts: DEFAULT_MIN_PTS,
            },
            k: ReliableCount::Auto,
            k_c: DEFAULT_KNN_K,
        }
    }
}

impl PipelineParams {
    pub fn with_weights(&self, alpha: f64, beta: f64) -> Self {
        PipelineParams {
            score: ScoreParams {
                alpha,
                beta,
                ..self.score
            },
            ..*self
        }
    }
}

/// Weight-independent state of a run.
#[derive(Debug)]
pub struct Prepared<'a> {
    ds: &'a Dataset,
    idx: &'a NeighborhoodIndex,
    labels: LabelSet,
    assignment: ClusterAssignment,
    components: ScoreTable,
}

pub fn prepare<'a>(
    ds: &'a Dataset,
    idx: &'a NeighborhoodIndex,
    labels: &LabelSet,
) -> Result<Prepared<'a>> {
    if idx.len() != ds.len() {
        return Err(Error::LengthMismatch {
            left: idx.len(),
            right: ds.len(),
        });
    }
    let records = expand_all(idx, labels, false)?;
    let assignment = assign_from_records(&records, labels);
    let emax = emax_over_roots(&records)?;
    let components = ScoreTable::components(idx, labels, &emax)?;
    Ok(Prepared {
        ds,
        idx,
        labels: labels.clone(),
        assignment,
        components,
    })
}

impl Prepared<'_> {
    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn components(&self) -> &ScoreTable {
        &self.components
    }

    pub fn finish(&self, params: &PipelineParams) -> Result<PipelineResult> {
        if params.score.min_pts != self.idx.min_pts() {
            return Err(Error::param(
                "min_pts",
                format!(
                    "{} differs from the index built with {}",
                    params.score.min_pts,
                    self.idx.min_pts()
                ),
            ));
        }
        if params.k_c == 0 {
            return Err(Error::param("k_c", "must be positive"));
        }
        let mut scores = self.components.clone();
        scores.weigh(&params.score)?;
        let unclustered = self.assignment.unclustered().count();
        let k = match params.k {
            ReliableCount::Auto => default_reliable_count(self.ds.len(), &self.labels, unclustered),
            ReliableCount::Fixed(k) => k,
        };
        let training = select_reliable(&self.assignment, &scores, k)?;
        let classifier = Classifier::train(&training, self.ds, params.k_c.min(training.len()))?;
        let preds = classifier.predict_indexed(self.idx)?;
        Ok(PipelineResult::from_predictions(
            &preds,
            scores,
            self.assignment.clone(),
            training,
        ))
    }
}

/// One complete run on `ds` with the given labels.
pub fn run(ds: &Dataset, labels: &LabelSet, params: &PipelineParams) -> Result<PipelineResult> {
    params.score.validate()?;
    let idx = NeighborhoodIndex::build(ds, params.score.min_pts)?;
    run_with_index(ds, &idx, labels, params)
}

pub fn run_with_index(
    ds: &Dataset,
    idx: &NeighborhoodIndex,
    labels: &LabelSet,
    params: &PipelineParams,
) -> Result<PipelineResult> {
    prepare(ds, idx, labels)?.finish(params)
}

/// `(alpha, beta)` pairs on the lattice `{0, step, 2 step, ...}` with
/// `alpha + beta <= 1`, in lexicographic order.
pub fn weight_lattice(step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::param(
            "grid_step",
            format!("{step} is outside (0, 1]"),
        ));
    }
    let divisions = (1.0 / step).round();
    let value: Box<dyn Fn(usize) -> f64> = if (divisions * step - 1.0).abs() < LATTICE_SLACK {
        let m = divisions;
        Box::new(move |i| i as f64 / m)
    } else {
        Box::new(move |i| i as f64 * step)
    };
    let count = (1.0 / step + LATTICE_SLACK).floor() as usize + 1;
    let mut cells = Vec::new();
    for i in 0..count {
        for j in 0..count - i {
            let (a, b) = (value(i), value(j));
            if a + b <= 1.0 + LATTICE_SLACK {
                cells.push((a, b));
            }
        }
    }
    Ok(cells)
}

/// True when `step` splits `[0, 1]` into a whole number of cells.
pub fn divides_unit(step: f64) -> bool {
    step > 0.0 && step <= 1.0 && ((1.0 / step).round() * step - 1.0).abs() < LATTICE_SLACK
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub grid: Vec<GridCell>,
    pub best: (f64, f64),
}

/// Splits the labeled points into `folds` hidden sets. Normals and outliers
/// are shuffled and dealt separately so every fold hides at least one normal
/// when there are at least `folds` normals.
pub fn label_folds(labels: &LabelSet, folds: usize, seed: u64) -> Vec<BTreeSet<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normals: Vec<usize> = labels.normal().keys().copied().collect();
    let mut outliers: Vec<usize> = labels.outliers().iter().copied().collect();
    normals.shuffle(&mut rng);
    outliers.shuffle(&mut rng);
    let mut out = vec![BTreeSet::new(); folds];
    for (i, p) in normals.into_iter().chain(outliers).enumerate() {
        out[i % folds].insert(p);
    }
    out
}

/// Objective on one validation fold: mean of AUC and Rand Index over the
/// hidden points, or Rand Index alone when the fold hides no outlier.
pub fn fold_objective(result: &PipelineResult, hidden: &[(usize, Class)]) -> Result<f64> {
    let predicted: Vec<Class> = hidden
        .iter()
        .map(|&(p, _)| result.clusters[p].map_or(Class::Outlier, Class::Cluster))
        .collect();
    let truth: Vec<Class> = hidden.iter().map(|&(_, c)| c).collect();
    // a single hidden point has no pairs to disagree on
    let ri = if hidden.len() < 2 {
        1.0
    } else {
        rand_index(&predicted, &truth)?
    };
    let positive: Vec<bool> = truth.iter().map(|c| c.is_outlier()).collect();
    if positive.iter().any(|&p| p) && positive.iter().any(|&p| !p) {
        let scores: Vec<f64> = hidden
            .iter()
            .map(|&(p, _)| result.outlier_score[p])
            .collect();
        Ok(0.5 * (auc(&scores, &positive)? + ri))
    } else {
        Ok(ri)
    }
}

/// Cross-validated grid search over `(alpha, beta)`.
///
/// Each fold hides part of the labels, runs the pipeline on the rest and
/// scores the hidden points. The best cell maximizes the fold-mean
/// objective; ties keep the lexicographically smallest pair.
pub fn tune(
    ds: &Dataset,
    idx: &NeighborhoodIndex,
    labels: &LabelSet,
    base: &PipelineParams,
    grid_step: f64,
    folds: usize,
    seed: u64,
) -> Result<TuneReport> {
    if folds < 2 {
        return Err(Error::param("folds", format!("{folds} must be at least 2")));
    }
    if labels.normal().len() < folds {
        return Err(Error::Precondition(format!(
            "{} labeled normals cannot fill {folds} folds",
            labels.normal().len()
        )));
    }
    let lattice = weight_lattice(grid_step)?;
    let mut totals = vec![0.0; lattice.len()];
    for hidden in label_folds(labels, folds, seed) {
        let visible = labels.without(&hidden);
        let prepared = prepare(ds, idx, &visible)?;
        let hidden: Vec<(usize, Class)> = hidden
            .iter()
            .map(|&p| (p, labels.label_of(p).expect("hidden points are labeled")))
            .collect();
        for (total, &(a, b)) in totals.iter_mut().zip(&lattice) {
            let result = prepared.finish(&base.with_weights(a, b))?;
            *total += fold_objective(&result, &hidden)?;
        }
    }
    let grid: Vec<GridCell> = lattice
        .iter()
        .zip(&totals)
        .map(|(&(alpha, beta), &t)| GridCell {
            alpha,
            beta,
            objective: t / folds as f64,
        })
        .collect();
    let mut best = grid[0];
    for cell in &grid[1..] {
        if cell.objective > best.objective {
            best = *cell;
        }
    }
    Ok(TuneReport {
        grid,
        best: (best.alpha, best.beta),
    })
}
