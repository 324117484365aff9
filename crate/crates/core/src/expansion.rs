//! Prim-order density expansion from labeled roots.
//!
//! An expansion grows a tree over the complete reachability-distance graph,
//! always attaching the point with the smallest reachability distance to the
//! tree. The running maximum of the attachment keys is the smallest density
//! threshold that connects the root to each inserted point (the bottleneck
//! distance). When the expansion meets a point carrying a different user
//! label, back-tracing cuts the insertion sequence at its longest edge so the
//! root's cluster stops short of the conflict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, LabelSet};
use crate::error::{Error, Result};
use crate::metricspace::NeighborhoodIndex;

/// First differently-labeled point met by an expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub point: usize,
    /// Position of `point` in the insertion order.
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    root: usize,
    order: Vec<(usize, f64)>,
    prefix_max: Vec<f64>,
    boundary: Option<Boundary>,
}

impl ExpansionRecord {
    pub fn root(&self) -> usize {
        self.root
    }

    /// `(point, attachment key)` in insertion order. The root comes first with key 0.
    pub fn order(&self) -> &[(usize, f64)] {
        &self.order
    }

    /// Largest key inserted up to and including each point. Points the
    /// expansion never reached hold `f64::INFINITY`.
    pub fn prefix_max(&self) -> &[f64] {
        &self.prefix_max
    }

    pub fn boundary(&self) -> Option<Boundary> {
        self.boundary
    }

    /// Points that join the root's cluster.
    ///
    /// With a boundary, the sequence is cut at the first position (after the
    /// root, up to the boundary) holding the largest key; the point at that
    /// position and everything after it are dropped. Without a boundary every
    /// inserted point is kept. Result is in insertion order.
    pub fn back_trace(&self) -> Vec<usize> {
        let end = match self.boundary {
            None => self.order.len(),
            Some(b) => {
                let mut cut = 1;
                for pos in 2..=b.position {
                    if self.order[pos].1 > self.order[cut].1 {
                        cut = pos;
                    }
                }
                cut
            }
        };
        self.order[..end].iter().map(|&(p, _)| p).collect()
    }
}

/// Per-point cluster id, `None` for unclustered points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterAssignment(Vec<Option<u32>>);

impl ClusterAssignment {
    pub fn new(assign: Vec<Option<u32>>) -> Self {
        ClusterAssignment(assign)
    }

    pub fn get(&self, p: usize) -> Option<u32> {
        self.0[p]
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn unclustered(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(i, _)| i)
    }

    pub fn clustered(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|c| (i, c)))
    }
}

/// Runs one Prim expansion from a labeled normal `root`.
///
/// Labeled outliers count as a label different from every cluster. With
/// `terminate` the expansion stops right after inserting the boundary point;
/// otherwise it continues until every point is inserted.
pub fn prim_expand(
    idx: &NeighborhoodIndex,
    root: usize,
    labels: &LabelSet,
    terminate: bool,
) -> Result<ExpansionRecord> {
    let n = idx.len();
    if root >= n {
        return Err(Error::IndexOutOfRange {
            index: root,
            len: n,
        });
    }
    let root_label = match labels.label_of(root) {
        Some(c @ Class::Cluster(_)) => c,
        Some(Class::Outlier) => {
            return Err(Error::Precondition(format!(
                "expansion root {root} is a labeled outlier"
            )))
        }
        None => {
            return Err(Error::Precondition(format!(
                "expansion root {root} is unlabeled"
            )))
        }
    };
    let user: Vec<Option<Class>> = (0..n).map(|i| labels.label_of(i)).collect();

    let mut key = vec![f64::INFINITY; n];
    let mut inserted = vec![false; n];
    let mut prefix_max = vec![f64::INFINITY; n];
    let mut order = Vec::with_capacity(n);
    let mut boundary = None;
    let mut running: f64 = 0.0;
    key[root] = 0.0;

    let mut next = Some(root);
    while let Some(q) = next {
        inserted[q] = true;
        running = running.max(key[q]);
        prefix_max[q] = running;
        order.push((q, key[q]));
        if boundary.is_none() && user[q].is_some_and(|l| l != root_label) {
            boundary = Some(Boundary {
                point: q,
                position: order.len() - 1,
            });
            if terminate {
                break;
            }
        }
        // relax keys and pick the next minimum in one sweep; strict `<`
        // keeps the lowest index on ties
        next = None;
        let mut best = f64::INFINITY;
        for s in 0..n {
            if inserted[s] {
                continue;
            }
            let r = idx.rdist(q, s);
            if r < key[s] {
                key[s] = r;
            }
            if next.is_none() || key[s] < best {
                best = key[s];
                next = Some(s);
            }
        }
    }

    Ok(ExpansionRecord {
        root,
        order,
        prefix_max,
        boundary,
    })
}

/// Expansions from every labeled normal point, in ascending root order.
pub fn expand_all(
    idx: &NeighborhoodIndex,
    labels: &LabelSet,
    terminate: bool,
) -> Result<Vec<ExpansionRecord>> {
    if labels.normal().is_empty() {
        return Err(Error::Precondition(
            "no labeled normal points to expand from".into(),
        ));
    }
    let roots: Vec<usize> = labels.normal().keys().copied().collect();
    roots
        .par_iter()
        .map(|&r| prim_expand(idx, r, labels, terminate))
        .collect()
}

/// Merges back-traced clusters from a set of expansions.
///
/// Same-label roots union their points. A point claimed by roots of different
/// labels goes to the root with the smallest prefix max at that point, ties by
/// lower root index.
pub fn assign_from_records(records: &[ExpansionRecord], labels: &LabelSet) -> ClusterAssignment {
    let n = records.first().map_or(0, |r| r.prefix_max.len());
    let mut best: Vec<Option<(f64, usize, u32)>> = vec![None; n];
    for rec in records {
        let label = labels.normal()[&rec.root];
        for p in rec.back_trace() {
            let cand = (rec.prefix_max[p], rec.root, label);
            let better = match best[p] {
                None => true,
                Some((v, r, _)) => cand.0.total_cmp(&v).then(cand.1.cmp(&r)).is_lt(),
            };
            if better {
                best[p] = Some(cand);
            }
        }
    }
    ClusterAssignment(best.into_iter().map(|b| b.map(|(_, _, c)| c)).collect())
}

/// Original semi-supervised DBSCAN: terminating expansions plus back-tracing.
pub fn ssdbscan(idx: &NeighborhoodIndex, labels: &LabelSet) -> Result<ClusterAssignment> {
    let records = expand_all(idx, labels, true)?;
    Ok(assign_from_records(&records, labels))
}

/// Per-point minimum of the prefix max over all roots.
pub fn emax_over_roots(records: &[ExpansionRecord]) -> Result<Vec<f64>> {
    let first = records
        .first()
        .ok_or_else(|| Error::Precondition("no expansion records".into()))?;
    let mut out = first.prefix_max.clone();
    for rec in &records[1..] {
        for (o, &v) in out.iter_mut().zip(&rec.prefix_max) {
            *o = o.min(v);
        }
    }
    Ok(out)
}

/// Gives every unclustered point the cluster of its nearest clustered point
/// (Euclidean, ties by lower index). Leaves the assignment unchanged when
/// nothing is clustered.
pub fn assign_unclustered_to_nearest(
    idx: &NeighborhoodIndex,
    assignment: &ClusterAssignment,
) -> ClusterAssignment {
    let clustered: Vec<(usize, u32)> = assignment.clustered().collect();
    if clustered.is_empty() {
        return assignment.clone();
    }
    let filled = assignment
        .0
        .iter()
        .enumerate()
        .map(|(p, a)| {
            a.or_else(|| {
                let mut best = clustered[0];
                for &(q, c) in &clustered[1..] {
                    if idx.dist(p, q) < idx.dist(p, best.0) {
                        best = (q, c);
                    }
                }
                Some(best.1)
            })
        })
        .collect();
    ClusterAssignment(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use std::collections::{BTreeMap, BTreeSet};

    fn line(xs: &[f64], min_pts: usize) -> NeighborhoodIndex {
        let ds = Dataset::new("l", 1, xs.to_vec(), vec![Class::Cluster(0); xs.len()]).unwrap();
        NeighborhoodIndex::build(&ds, min_pts).unwrap()
    }

    fn labels(n: usize, normal: &[(usize, u32)], outliers: &[usize]) -> LabelSet {
        LabelSet::new(
            n,
            normal.iter().copied().collect::<BTreeMap<_, _>>(),
            outliers.iter().copied().collect::<BTreeSet<_>>(),
        )
        .unwrap()
    }

    fn record(keys: &[f64], boundary_pos: Option<usize>) -> ExpansionRecord {
        let order: Vec<(usize, f64)> = keys.iter().copied().enumerate().collect();
        let mut prefix_max = Vec::new();
        let mut m: f64 = 0.0;
        for &k in keys {
            m = m.max(k);
            prefix_max.push(m);
        }
        ExpansionRecord {
            root: 0,
            order,
            prefix_max,
            boundary: boundary_pos.map(|p| Boundary {
                point: p,
                position: p,
            }),
        }
    }

    #[test]
    fn hand_run_three_points() {
        let idx = line(&[0.0, 1.0, 3.0], 1);
        let rec = prim_expand(&idx, 0, &labels(3, &[(0, 0)], &[]), false).unwrap();
        assert_eq!(rec.order(), &[(0, 0.0), (1, 1.0), (2, 2.0)]);
        assert_eq!(rec.prefix_max(), &[0.0, 1.0, 2.0]);
        assert_eq!(rec.boundary(), None);
    }

    #[test]
    fn root_must_be_labeled_normal() {
        let idx = line(&[0.0, 1.0, 3.0], 1);
        let l = labels(3, &[(0, 0)], &[1]);
        assert!(prim_expand(&idx, 1, &l, false).is_err());
        assert!(prim_expand(&idx, 2, &l, false).is_err());
        assert!(prim_expand(&idx, 7, &l, false).is_err());
    }

    #[test]
    fn back_trace_cuts_at_first_longest_edge() {
        let rec = record(&[0.0, 1.0, 1.2, 5.0, 1.1], Some(4));
        assert_eq!(rec.back_trace(), vec![0, 1, 2]);
        assert_eq!(record(&[0.0, 2.0], Some(1)).back_trace(), vec![0]);
        // equal maxima: the earliest one wins
        assert_eq!(
            record(&[0.0, 1.0, 3.0, 3.0, 0.5], Some(4)).back_trace(),
            vec![0, 1]
        );
        assert_eq!(record(&[0.0, 1.0, 9.0], None).back_trace(), vec![0, 1, 2]);
    }

    #[test]
    fn back_trace_leaves_the_far_endpoint_unclustered() {
        // s1=0, c1=1, c2=2, c3=6, c4=7 with s1 and c4 labeled differently;
        // the longest edge sits between c2 and c3
        let idx = line(&[0.0, 1.0, 2.0, 6.0, 7.0], 1);
        let l = labels(5, &[(0, 0), (4, 1)], &[]);
        let rec = prim_expand(&idx, 0, &l, true).unwrap();
        assert_eq!(rec.boundary().map(|b| b.point), Some(4));
        assert_eq!(rec.back_trace(), vec![0, 1, 2]);
        let a = ssdbscan(&idx, &l).unwrap();
        assert_eq!(a.as_slice(), &[Some(0), Some(0), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn two_groups_stay_apart() {
        let idx = line(&[0.0, 0.1, 10.0, 10.1], 1);
        let a = ssdbscan(&idx, &labels(4, &[(0, 0), (3, 1)], &[])).unwrap();
        assert_eq!(a.as_slice(), &[Some(0), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn single_label_takes_everything() {
        let idx = line(&[0.0, 0.5, 3.0, 9.0], 2);
        let all = labels(4, &[(0, 4), (1, 4), (2, 4), (3, 4)], &[]);
        let a = ssdbscan(&idx, &all).unwrap();
        assert!(a.as_slice().iter().all(|&c| c == Some(4)));
    }

    #[test]
    fn labeled_outlier_between_same_class() {
        let idx = line(&[0.0, 1.0, 2.0, 3.0, 4.0], 1);
        let l = labels(5, &[(0, 0), (4, 0)], &[2]);
        let a = ssdbscan(&idx, &l).unwrap();
        assert_eq!(a.get(2), None);
        assert_eq!(a.get(0), Some(0));
        assert_eq!(a.get(4), Some(0));
    }

    #[test]
    fn non_terminating_covers_all_points() {
        let idx = line(&[0.0, 1.0, 2.0, 6.0, 7.0], 1);
        let l = labels(5, &[(0, 0), (4, 1)], &[]);
        let rec = prim_expand(&idx, 0, &l, false).unwrap();
        assert_eq!(rec.order().len(), 5);
        let mut seen: Vec<usize> = rec.order().iter().map(|o| o.0).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        // boundary still recorded, back-trace unchanged by continuing
        assert_eq!(rec.back_trace(), vec![0, 1, 2]);
    }

    #[test]
    fn emax_is_min_over_roots() {
        let idx = line(&[0.0, 1.0, 2.0, 6.0, 7.0], 1);
        let l = labels(5, &[(0, 0), (4, 1)], &[]);
        let recs = expand_all(&idx, &l, false).unwrap();
        let e = emax_over_roots(&recs).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(emax_over_roots(&recs[..1]).unwrap(), recs[0].prefix_max());
        assert!(emax_over_roots(&[]).is_err());
    }

    #[test]
    fn conflict_goes_to_most_reachable_root() {
        // point 1 is claimed by both roots; root 2 reaches it at 1.5
        let l = labels(3, &[(0, 0), (2, 1)], &[]);
        let a = ExpansionRecord {
            root: 0,
            order: vec![(0, 0.0), (1, 2.0)],
            prefix_max: vec![0.0, 2.0, f64::INFINITY],
            boundary: None,
        };
        let b = ExpansionRecord {
            root: 2,
            order: vec![(2, 0.0), (1, 1.5)],
            prefix_max: vec![f64::INFINITY, 1.5, 0.0],
            boundary: None,
        };
        let out = assign_from_records(&[a, b], &l);
        assert_eq!(out.as_slice(), &[Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn nearest_fallback() {
        let idx = line(&[0.0, 1.0, 2.0, 6.0, 7.0, 3.0], 1);
        let a = ClusterAssignment::new(vec![Some(0), Some(0), None, None, Some(1), None]);
        let filled = assign_unclustered_to_nearest(&idx, &a);
        assert_eq!(
            filled.as_slice(),
            &[Some(0), Some(0), Some(0), Some(1), Some(1), Some(0)]
        );
    }
}
