//! Reliable training sets and the instance-weighted nearest-neighbor classifier.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::expansion::ClusterAssignment;
use crate::metricspace::{euclidean, NeighborhoodIndex};
use crate::scoring::ScoreTable;

pub const DEFAULT_KNN_K: usize = 5;
const FALLBACK_CONTAMINATION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingEntry {
    pub point: usize,
    pub class: Class,
    pub weight: f64,
}

/// Reliable normals (back-traced cluster members weighted by their
/// reachability score) followed by reliable outliers (weighted by total score).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub entries: Vec<TrainingEntry>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn reliable_outliers(&self) -> impl Iterator<Item = &TrainingEntry> {
        self.entries.iter().filter(|e| e.class.is_outlier())
    }

    pub fn reliable_normals(&self) -> impl Iterator<Item = &TrainingEntry> {
        self.entries.iter().filter(|e| !e.class.is_outlier())
    }
}

/// Builds the training set: every clustered point, plus the `k` unclustered
/// points with the highest total score (ties by lower index).
pub fn select_reliable(
    assignment: &ClusterAssignment,
    scores: &ScoreTable,
    k: usize,
) -> Result<TrainingSet> {
    if assignment.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: assignment.len(),
            right: scores.len(),
        });
    }
    let mut entries: Vec<TrainingEntry> = assignment
        .clustered()
        .map(|(p, c)| TrainingEntry {
            point: p,
            class: Class::Cluster(c),
            weight: scores.r_score[p],
        })
        .collect();
    let mut pool: Vec<usize> = assignment.unclustered().collect();
    if k > pool.len() {
        return Err(Error::param(
            "k",
            format!(
                "{k} reliable outliers requested but only {} points are unclustered",
                pool.len()
            ),
        ));
    }
    let t = &scores.t_score;
    pool.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    entries.extend(pool[..k].iter().map(|&p| TrainingEntry {
        point: p,
        class: Class::Outlier,
        weight: t[p],
    }));
    Ok(TrainingSet { entries })
}

/// Default reliable-outlier count: the labeled outlier share of `n` when
/// outliers are labeled, else 5% of `n`; never more than `unclustered`.
pub fn default_reliable_count(n: usize, labels: &LabelSet, unclustered: usize) -> usize {
    let share = if labels.outliers().is_empty() || labels.is_empty() {
        FALLBACK_CONTAMINATION
    } else {
        labels.outliers().len() as f64 / labels.len() as f64
    };
    ((n as f64 * share).round() as usize).min(unclustered)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: Class,
    /// Outlier share of the neighbor vote mass, in `[0, 1]`.
    pub outlier_score: f64,
}

/// Any classifier that can learn from weighted entries and label points.
pub trait InstanceClassifier {
    fn predict_point(&self, query: &[f64]) -> Result<Prediction>;
}

/// Weighted k-nearest-neighbor vote over the training entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    dim: usize,
    k: usize,
    features: Vec<f64>,
    entries: Vec<TrainingEntry>,
}

impl Classifier {
    pub fn train(ts: &TrainingSet, ds: &Dataset, k: usize) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::Precondition("empty training set".into()));
        }
        if k == 0 || k > ts.len() {
            return Err(Error::param(
                "k_c",
                format!("{k} must lie in 1..={}", ts.len()),
            ));
        }
        let mut features = Vec::with_capacity(ts.len() * ds.dim());
        for e in &ts.entries {
            if e.point >= ds.len() {
                return Err(Error::IndexOutOfRange {
                    index: e.point,
                    len: ds.len(),
                });
            }
            if e.weight.is_nan() || e.weight < 0.0 {
                return Err(Error::param(
                    "weight",
                    format!("{} for point {}", e.weight, e.point),
                ));
            }
            features.extend_from_slice(ds.point(e.point));
        }
        Ok(Classifier {
            dim: ds.dim(),
            k,
            features,
            entries: ts.entries.clone(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[TrainingEntry] {
        &self.entries
    }

    /// Predicts every point of `ds` by brute-force neighbor search.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<Prediction>> {
        if ds.dim() != self.dim {
            return Err(Error::LengthMismatch {
                left: ds.dim(),
                right: self.dim,
            });
        }
        Ok((0..ds.len())
            .into_par_iter()
            .map(|i| self.vote_brute(ds.point(i)))
            .collect())
    }

    /// Predicts every point of the dataset the index was built from, walking
    /// the index's sorted neighbor rows instead of recomputing distances.
    /// Agrees exactly with [`Classifier::predict`] on that dataset.
    pub fn predict_indexed(&self, idx: &NeighborhoodIndex) -> Result<Vec<Prediction>> {
        let mut slot: HashMap<usize, usize> = HashMap::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if e.point >= idx.len() {
                return Err(Error::IndexOutOfRange {
                    index: e.point,
                    len: idx.len(),
                });
            }
            slot.entry(e.point).or_insert(i);
        }
        if slot.len() != self.entries.len() {
            return Err(Error::Precondition("training set repeats a point".into()));
        }
        Ok((0..idx.len())
            .into_par_iter()
            .map(|q| {
                let picked = idx
                    .neighbors_by_distance(q)
                    .iter()
                    .filter_map(|&p| slot.get(&(p as usize)).copied())
                    .take(self.k);
                self.tally(picked)
            })
            .collect())
    }

    fn vote_brute(&self, query: &[f64]) -> Prediction {
        let mut cand: Vec<(f64, usize, usize)> = self
            .features
            .chunks_exact(self.dim)
            .zip(&self.entries)
            .enumerate()
            .map(|(i, (f, e))| (euclidean(query, f), e.point, i))
            .collect();
        let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if self.k < cand.len() {
            cand.select_nth_unstable_by(self.k - 1, cmp);
            cand.truncate(self.k);
        }
        cand.sort_unstable_by(cmp);
        self.tally(cand.into_iter().map(|c| c.2))
    }

    fn tally(&self, neighbors: impl Iterator<Item = usize>) -> Prediction {
        let chosen: Vec<&TrainingEntry> = neighbors.map(|i| &self.entries[i]).collect();
        let total: f64 = chosen.iter().map(|e| e.weight).sum();
        // all-zero weights fall back to an unweighted vote
        let weight = |e: &TrainingEntry| if total > 0.0 { e.weight } else { 1.0 };
        let mut mass: Vec<(Class, f64)> = Vec::new();
        for e in &chosen {
            match mass.iter_mut().find(|(c, _)| *c == e.class) {
                Some(m) => m.1 += weight(e),
                None => mass.push((e.class, weight(e))),
            }
        }
        let (class, _) = mass
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("k >= 1 neighbors");
        let sum: f64 = mass.iter().map(|m| m.1).sum();
        let out = mass.iter().find(|m| m.0.is_outlier()).map_or(0.0, |m| m.1);
        Prediction {
            class,
            outlier_score: (out / sum).clamp(0.0, 1.0),
        }
    }
}

impl InstanceClassifier for Classifier {
    fn predict_point(&self, query: &[f64]) -> Result<Prediction> {
        if query.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: query.len(),
                right: self.dim,
            });
        }
        Ok(self.vote_brute(query))
    }
}

/// Everything an end-to-end run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    /// Predicted cluster per point, `None` where the point is predicted outlier.
    pub clusters: Vec<Option<u32>>,
    pub outliers: Vec<bool>,
    pub outlier_score: Vec<f64>,
    pub score_table: ScoreTable,
    pub assignment: ClusterAssignment,
    pub training: TrainingSet,
}

impl PipelineResult {
    pub fn from_predictions(
        preds: &[Prediction],
        score_table: ScoreTable,
        assignment: ClusterAssignment,
        training: TrainingSet,
    ) -> Self {
        PipelineResult {
            clusters: preds.iter().map(|p| p.class.cluster()).collect(),
            outliers: preds.iter().map(|p| p.class.is_outlier()).collect(),
            outlier_score: preds.iter().map(|p| p.outlier_score).collect(),
            score_table,
            assignment,
            training,
        }
    }

    pub fn classes(&self) -> Vec<Class> {
        self.clusters
            .iter()
            .map(|c| c.map_or(Class::Outlier, Class::Cluster))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(t: &[f64]) -> ScoreTable {
        ScoreTable {
            r_score: vec![1.0; t.len()],
            l_score: vec![1.0; t.len()],
            sim_score: vec![0.0; t.len()],
            t_score: t.to_vec(),
        }
    }

    #[test]
    fn picks_top_total_scores() {
        let a = ClusterAssignment::new(vec![Some(0), None, None, None]);
        let ts = select_reliable(&a, &scores(&[0.0, 0.9, 0.5, 0.7]), 2).unwrap();
        let outs: Vec<usize> = ts.reliable_outliers().map(|e| e.point).collect();
        assert_eq!(outs, vec![1, 3]);
        assert_eq!(ts.reliable_normals().count(), 1);
        let none = select_reliable(&a, &scores(&[0.0, 0.9, 0.5, 0.7]), 0).unwrap();
        assert_eq!(none.reliable_outliers().count(), 0);
        assert_eq!(none.len(), 1);
        let all = select_reliable(&a, &scores(&[0.0, 0.9, 0.5, 0.7]), 3).unwrap();
        assert_eq!(all.reliable_outliers().count(), 3);
        assert!(select_reliable(&a, &scores(&[0.0, 0.9, 0.5, 0.7]), 4).is_err());
    }

    #[test]
    fn default_count() {
        let l = LabelSet::new(
            100,
            (0..8).map(|i| (i, 0)).collect(),
            [50, 51].into_iter().collect(),
        )
        .unwrap();
        assert_eq!(default_reliable_count(100, &l, 90), 20);
        assert_eq!(default_reliable_count(100, &l, 7), 7);
        let no_out =
            LabelSet::new(100, [(0, 0)].into_iter().collect(), Default::default()).unwrap();
        assert_eq!(default_reliable_count(100, &no_out, 90), 5);
    }

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new("l", 1, xs.to_vec(), vec![Class::Cluster(0); xs.len()]).unwrap()
    }

    fn entry(point: usize, class: Class, weight: f64) -> TrainingEntry {
        TrainingEntry {
            point,
            class,
            weight,
        }
    }

    #[test]
    fn degenerate_and_nearest() {
        let ds = line(&[0.0, 1.0, 5.0]);
        let one = TrainingSet {
            entries: vec![entry(1, Class::Cluster(3), 0.2)],
        };
        let c = Classifier::train(&one, &ds, 1).unwrap();
        assert!(c
            .predict(&ds)
            .unwrap()
            .iter()
            .all(|p| p.class == Class::Cluster(3)));
        let two = TrainingSet {
            entries: vec![
                entry(0, Class::Cluster(0), 1.0),
                entry(2, Class::Outlier, 0.1),
            ],
        };
        let c = Classifier::train(&two, &ds, 1).unwrap();
        let p = c.predict(&ds).unwrap();
        assert_eq!(p[1].class, Class::Cluster(0));
        assert_eq!(p[2].class, Class::Outlier);
        assert_eq!(p[2].outlier_score, 1.0);
        assert_eq!(p[0].outlier_score, 0.0);
        assert!(Classifier::train(&two, &ds, 3).is_err());
        assert!(Classifier::train(&TrainingSet::default(), &ds, 1).is_err());
    }

    #[test]
    fn weighted_vote_equidistant() {
        let ds = line(&[-1.0, 1.0, 0.0]);
        let ts = TrainingSet {
            entries: vec![
                entry(0, Class::Cluster(0), 0.9),
                entry(1, Class::Outlier, 0.1),
            ],
        };
        let c = Classifier::train(&ts, &ds, 2).unwrap();
        let p = c.predict_point(&[0.0]).unwrap();
        assert_eq!(p.class, Class::Cluster(0));
        assert!((p.outlier_score - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_clusters_then_lower_ids() {
        let ds = line(&[-1.0, 1.0, 0.0]);
        let ts = TrainingSet {
            entries: vec![
                entry(0, Class::Outlier, 0.5),
                entry(1, Class::Cluster(0), 0.5),
            ],
        };
        let c = Classifier::train(&ts, &ds, 2).unwrap();
        assert_eq!(c.predict_point(&[0.0]).unwrap().class, Class::Cluster(0));
        let ts = TrainingSet {
            entries: vec![
                entry(0, Class::Cluster(4), 0.5),
                entry(1, Class::Cluster(2), 0.5),
            ],
        };
        let c = Classifier::train(&ts, &ds, 2).unwrap();
        assert_eq!(c.predict_point(&[0.0]).unwrap().class, Class::Cluster(2));
    }

    #[test]
    fn zero_weights_fall_back_to_counts() {
        let ds = line(&[0.0, 1.0, 2.0]);
        let ts = TrainingSet {
            entries: vec![entry(0, Class::Outlier, 0.0), entry(1, Class::Outlier, 0.0)],
        };
        let c = Classifier::train(&ts, &ds, 2).unwrap();
        let p = c.predict_point(&[2.0]).unwrap();
        assert_eq!(p.class, Class::Outlier);
        assert_eq!(p.outlier_score, 1.0);
    }

    #[test]
    fn far_query_hits_reliable_outlier() {
        let ds = line(&[0.0, 1.0, 10.0, 11.0, 90.0, 100.0]);
        let ts = TrainingSet {
            entries: vec![
                entry(0, Class::Cluster(0), 1.0),
                entry(1, Class::Cluster(0), 1.0),
                entry(2, Class::Cluster(1), 1.0),
                entry(3, Class::Cluster(1), 1.0),
                entry(4, Class::Outlier, 0.8),
            ],
        };
        let c = Classifier::train(&ts, &ds, 1).unwrap();
        assert_eq!(c.predict_point(&[100.0]).unwrap().class, Class::Outlier);
        assert!(c.predict_point(&[1.0, 2.0]).is_err());
    }

    fn random_setup() -> impl Strategy<Value = (Vec<f64>, Vec<(usize, u8, f64)>, usize)> {
        (5usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0..50.0f64, n),
                prop::collection::vec((0..n, 0u8..4, 0.01..1.0f64), 1..n),
                1usize..6,
            )
        })
    }

    fn build(xs: &[f64], raw: &[(usize, u8, f64)]) -> (Dataset, TrainingSet) {
        let mut seen = std::collections::HashSet::new();
        let entries = raw
            .iter()
            .filter(|(p, _, _)| seen.insert(*p))
            .map(|&(p, c, w)| {
                entry(
                    p,
                    if c == 3 {
                        Class::Outlier
                    } else {
                        Class::Cluster(c as u32)
                    },
                    w,
                )
            })
            .collect();
        (line(xs), TrainingSet { entries })
    }

    proptest! {
        #[test]
        fn indexed_matches_brute((xs, raw, k) in random_setup()) {
            let (ds, ts) = build(&xs, &raw);
            let k = k.min(ts.len());
            let idx = NeighborhoodIndex::build(&ds, 1).unwrap();
            let c = Classifier::train(&ts, &ds, k).unwrap();
            prop_assert_eq!(c.predict(&ds).unwrap(), c.predict_indexed(&idx).unwrap());
        }

        #[test]
        fn vote_invariants((xs, raw, k) in random_setup(), scale_pow in -3i32..4, rot in 0usize..30) {
            let (ds, ts) = build(&xs, &raw);
            let k = k.min(ts.len());
            let base = Classifier::train(&ts, &ds, k).unwrap().predict(&ds).unwrap();
            for p in &base {
                prop_assert!((0.0..=1.0).contains(&p.outlier_score));
                if p.class.is_outlier() {
                    prop_assert!(p.outlier_score > 0.0);
                }
            }
            let scale = 2f64.powi(scale_pow);
            let mut scaled = ts.clone();
            scaled.entries.iter_mut().for_each(|e| e.weight *= scale);
            let sp = Classifier::train(&scaled, &ds, k).unwrap().predict(&ds).unwrap();
            let classes = |v: &[Prediction]| v.iter().map(|p| p.class).collect::<Vec<_>>();
            prop_assert_eq!(classes(&base), classes(&sp));
            let mut permuted = ts.clone();
            let len = permuted.entries.len();
            permuted.entries.rotate_left(rot % len);
            let pp = Classifier::train(&permuted, &ds, k).unwrap().predict(&ds).unwrap();
            prop_assert_eq!(classes(&base), classes(&pp));
        }
    }
}
