//! Unsupervised reference algorithms: DBSCAN, k-means and LOF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metricspace::NeighborhoodIndex;

// keeps lrd finite when k neighbors coincide
const LRD_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineResult {
    /// Cluster id per point; `None` marks noise.
    Clusters(Vec<Option<u32>>),
    /// Outlier score per point, higher is more outlying.
    Scores(Vec<f64>),
}

/// Density-based clustering with a global radius.
///
/// A point is core when at least `min_pts` *other* points lie within
/// `epsilon`. Cores connected through hops of at most `epsilon` share a
/// cluster; clusters are numbered by their lowest-index core. A non-core point
/// joins the cluster of its lowest-index core neighbor, or stays noise.
pub fn dbscan(idx: &NeighborhoodIndex, epsilon: f64, min_pts: usize) -> Result<Vec<Option<u32>>> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
    }
    if min_pts == 0 {
        return Err(Error::param("min_pts", "must be positive"));
    }
    let n = idx.len();
    let core: Vec<bool> = (0..n)
        .map(|p| {
            (0..n)
                .filter(|&q| q != p && idx.dist(p, q) <= epsilon)
                .count()
                >= min_pts
        })
        .collect();
    let mut label: Vec<Option<u32>> = vec![None; n];
    let mut next = 0u32;
    for start in 0..n {
        if !core[start] || label[start].is_some() {
            continue;
        }
        label[start] = Some(next);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if core[v] && label[v].is_none() && idx.dist(u, v) <= epsilon {
                    label[v] = Some(next);
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    for p in 0..n {
        if !core[p] {
            label[p] = (0..n)
                .find(|&q| core[q] && q != p && idx.dist(p, q) <= epsilon)
                .and_then(|q| label[q]);
        }
    }
    Ok(label)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KMeansFit {
    pub assignment: Vec<u32>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances after each assignment step, then after the
    /// final centroid update.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Lloyd iterations from k-means++ seeding.
pub fn kmeans(ds: &Dataset, k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    let n = ds.len();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("{k} must lie in 1..={n}")));
    }
    if max_iter == 0 {
        return Err(Error::param("max_iter", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(ds, k, &mut rng);
    let mut assignment: Vec<u32> = vec![u32::MAX; n];
    let mut objective = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (next, cost) = assign(ds, &centroids);
        objective.push(cost);
        if next == assignment {
            break;
        }
        assignment = next;
        centroids = update(ds, &assignment, centroids);
    }
    let (_, cost) = assign(ds, &centroids);
    objective.push(cost);
    Ok(KMeansFit {
        assignment,
        centroids,
        objective,
        iterations,
    })
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_plus_plus(ds: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = ds.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![ds.point(first).to_vec()];
    let mut d2: Vec<f64> = ds.points().map(|p| squared(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        let c = ds.point(pick).to_vec();
        for (i, p) in ds.points().enumerate() {
            d2[i] = d2[i].min(squared(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(ds: &Dataset, centroids: &[Vec<f64>]) -> (Vec<u32>, f64) {
    let mut cost = 0.0;
    let labels = ds
        .points()
        .map(|p| {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(j, c)| (j, squared(p, c)))
                .fold(
                    (0, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
            cost += d;
            best as u32
        })
        .collect();
    (labels, cost)
}

fn update(ds: &Dataset, assignment: &[u32], old: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = old.len();
    let mut sums = vec![vec![0.0; ds.dim()]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in ds.points().zip(assignment) {
        counts[a as usize] += 1;
        for (s, v) in sums[a as usize].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, c), o)| {
            if c == 0 {
                o
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// Local outlier factor with exactly `k` nearest other points per point
/// (ties by lower index).
pub fn lof(idx: &NeighborhoodIndex, k: usize) -> Result<Vec<f64>> {
    let n = idx.len();
    if k == 0 || k > n - 1 {
        return Err(Error::param("k", format!("{k} must lie in 1..={}", n - 1)));
    }
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|p| {
            idx.neighbors_by_distance(p)
                .iter()
                .map(|&q| q as usize)
                .filter(|&q| q != p)
                .take(k)
                .collect()
        })
        .collect();
    let kdist: Vec<f64> = (0..n).map(|p| idx.dist(p, neighbors[p][k - 1])).collect();
    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let mean = neighbors[p]
                .iter()
                .map(|&o| kdist[o].max(idx.dist(p, o)))
                .sum::<f64>()
                / k as f64;
            1.0 / (mean + LRD_FLOOR)
        })
        .collect();
    Ok((0..n)
        .map(|p| neighbors[p].iter().map(|&o| lrd[o]).sum::<f64>() / k as f64 / lrd[p])
        .collect())
}

/// Sum of squared distances from points to their assigned centroid.
pub fn kmeans_cost(ds: &Dataset, fit: &KMeansFit) -> f64 {
    ds.points()
        .zip(&fit.assignment)
        .map(|(p, &a)| squared(p, &fit.centroids[a as usize]))
        .sum()
}
