//! Pairwise Euclidean distances, core distances and reachability distances.
//!
//! The neighborhood of a point never includes the point itself: the core
//! distance is the distance to the `min_pts`-th nearest *other* point.

use std::collections::VecDeque;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense distance matrix plus per-point core distances.
#[derive(Debug)]
pub struct NeighborhoodIndex {
    n: usize,
    min_pts: usize,
    dist: Vec<f64>,
    core: Vec<f64>,
    // Rows of point indices sorted by (distance, index), built on first use.
    by_distance: OnceLock<Vec<u32>>,
}

impl NeighborhoodIndex {
    pub fn build(ds: &Dataset, min_pts: usize) -> Result<Self> {
        let n = ds.len();
        if n < 2 {
            return Err(Error::Precondition(format!(
                "need at least 2 points for a neighborhood index, got {n}"
            )));
        }
        if min_pts == 0 || min_pts > n - 1 {
            return Err(Error::param(
                "min_pts",
                format!("{min_pts} must lie in 1..={}", n - 1),
            ));
        }
        let mut dist = vec![0.0; n * n];
        dist.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let p = ds.point(i);
            for (j, d) in row.iter_mut().enumerate() {
                if j != i {
                    *d = euclidean(p, ds.point(j));
                }
            }
        });
        let core = (0..n)
            .into_par_iter()
            .map(|i| kth_other(&dist[i * n..(i + 1) * n], i, min_pts))
            .collect();
        Ok(NeighborhoodIndex {
            n,
            min_pts,
            dist,
            core,
            by_distance: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn min_pts(&self) -> usize {
        self.min_pts
    }

    pub fn core_distances(&self) -> &[f64] {
        &self.core
    }

    pub fn core(&self, p: usize) -> f64 {
        self.core[p]
    }

    /// Euclidean distance. Panics on out-of-range indices.
    #[inline]
    pub fn dist(&self, p: usize, q: usize) -> f64 {
        self.dist[p * self.n + q]
    }

    pub fn dist_row(&self, p: usize) -> &[f64] {
        &self.dist[p * self.n..(p + 1) * self.n]
    }

    /// `max(core(p), core(q), dist(p, q))` without bounds reporting.
    #[inline]
    pub fn rdist(&self, p: usize, q: usize) -> f64 {
        self.core[p].max(self.core[q]).max(self.dist(p, q))
    }

    pub fn reach_distance(&self, p: usize, q: usize) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.rdist(p, q))
    }

    /// The `m` points other than `q` with the smallest reachability distance
    /// to `q`, ascending, ties by lower index.
    pub fn knn_by_rdist(&self, q: usize, m: usize) -> Result<Vec<usize>> {
        self.check(q)?;
        if m == 0 || m > self.n - 1 {
            return Err(Error::param(
                "m",
                format!("{m} must lie in 1..={}", self.n - 1),
            ));
        }
        let mut others: Vec<(f64, usize)> = (0..self.n)
            .filter(|&j| j != q)
            .map(|j| (self.rdist(q, j), j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if m < others.len() {
            others.select_nth_unstable_by(m - 1, cmp);
            others.truncate(m);
        }
        others.sort_unstable_by(cmp);
        Ok(others.into_iter().map(|(_, j)| j).collect())
    }

    /// Graph search for a chain of core objects (at `epsilon`) joining `p`
    /// and `q` with every hop no longer than `epsilon`.
    pub fn is_density_reachable(&self, p: usize, q: usize, epsilon: f64) -> Result<bool> {
        self.check(p)?;
        self.check(q)?;
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::param("epsilon", format!("{epsilon} must be >= 0")));
        }
        let is_core = |i: usize| self.core[i] <= epsilon;
        if !is_core(p) || !is_core(q) {
            return Ok(false);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([p]);
        seen[p] = true;
        while let Some(u) = queue.pop_front() {
            if u == q {
                return Ok(true);
            }
            for (v, s) in seen.iter_mut().enumerate() {
                if !*s && is_core(v) && self.dist(u, v) <= epsilon {
                    *s = true;
                    queue.push_back(v);
                }
            }
        }
        Ok(false)
    }

    /// Row `p` of all point indices (including `p`) sorted by distance from
    /// `p`, ties by lower index.
    pub fn neighbors_by_distance(&self, p: usize) -> &[u32] {
        let order = self.by_distance.get_or_init(|| {
            let n = self.n;
            let mut order = vec![0u32; n * n];
            order.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = j as u32;
                }
                let d = self.dist_row(i);
                row.sort_unstable_by(|&a, &b| {
                    d[a as usize].total_cmp(&d[b as usize]).then(a.cmp(&b))
                });
            });
            order
        });
        &order[p * self.n..(p + 1) * self.n]
    }

    fn check(&self, p: usize) -> Result<()> {
        if p < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: p,
                len: self.n,
            })
        }
    }
}

/// `k`-th smallest entry of `row`, skipping position `skip`.
fn kth_other(row: &[f64], skip: usize, k: usize) -> f64 {
    let mut others: Vec<f64> = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &d)| d)
        .collect();
    *others.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Class;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new("line", 1, xs.to_vec(), vec![Class::Cluster(0); xs.len()]).unwrap()
    }

    #[test]
    fn core_distances_on_a_line() {
        let idx = NeighborhoodIndex::build(&line(&[0.0, 1.0, 3.0, 7.0]), 2).unwrap();
        assert_eq!(idx.core_distances(), &[3.0, 2.0, 3.0, 6.0]);
        assert_eq!(idx.reach_distance(1, 2).unwrap(), 3.0);
    }

    #[test]
    fn min_pts_one_is_nearest_neighbor() {
        let idx = NeighborhoodIndex::build(&line(&[0.0, 1.0, 3.0, 7.0]), 1).unwrap();
        assert_eq!(idx.core_distances(), &[1.0, 1.0, 2.0, 4.0]);
        let coincident = NeighborhoodIndex::build(&line(&[2.0, 2.0]), 1).unwrap();
        assert_eq!(coincident.core_distances(), &[0.0, 0.0]);
    }

    #[test]
    fn build_errors() {
        assert!(NeighborhoodIndex::build(&line(&[0.0]), 1).is_err());
        assert!(NeighborhoodIndex::build(&line(&[0.0, 1.0]), 2).is_err());
        assert!(NeighborhoodIndex::build(&line(&[0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn knn_order_and_ties() {
        let idx = NeighborhoodIndex::build(&line(&[0.0, 1.0, 3.0, 7.0]), 1).unwrap();
        assert_eq!(idx.knn_by_rdist(0, 2).unwrap(), vec![1, 2]);
        let mut all = idx.knn_by_rdist(2, 3).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 3]);
        let sym = NeighborhoodIndex::build(&line(&[-1.0, 0.0, 1.0]), 1).unwrap();
        // both neighbors of the middle point sit at rDist 1
        assert_eq!(sym.knn_by_rdist(1, 1).unwrap(), vec![0]);
        assert!(idx.knn_by_rdist(0, 4).is_err());
        assert!(idx.knn_by_rdist(9, 1).is_err());
    }

    #[test]
    fn density_reachability_basics() {
        let idx = NeighborhoodIndex::build(&line(&[0.0, 1.0, 3.0, 7.0]), 1).unwrap();
        assert!(idx.is_density_reachable(0, 1, idx.rdist(0, 1)).unwrap());
        assert!(!idx.is_density_reachable(0, 1, 0.0).unwrap());
        // 0 -> 3 needs the 4.0 hop from 3 to 7
        assert!(!idx.is_density_reachable(0, 3, 3.9).unwrap());
        assert!(idx.is_density_reachable(0, 3, 4.0).unwrap());
        assert!(idx.reach_distance(0, 4).is_err());
    }

    #[test]
    fn neighbor_rows_sorted() {
        let idx = NeighborhoodIndex::build(&line(&[5.0, 0.0, 4.0, 6.0]), 1).unwrap();
        assert_eq!(idx.neighbors_by_distance(0), &[0, 2, 3, 1]);
        assert_eq!(idx.neighbors_by_distance(1), &[1, 2, 0, 3]);
    }

    fn points() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
        (2usize..30, 1usize..4).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n),
                1..n.min(5),
            )
        })
    }

    proptest! {
        #[test]
        fn core_by_selection_matches_full_sort((rows, min_pts) in points()) {
            let n = rows.len();
            let ds = Dataset::from_rows("p", &rows, vec![Class::Cluster(0); n]).unwrap();
            let idx = NeighborhoodIndex::build(&ds, min_pts).unwrap();
            for p in 0..n {
                let mut others: Vec<f64> = (0..n).filter(|&q| q != p).map(|q| idx.dist(p, q)).collect();
                others.sort_by(f64::total_cmp);
                prop_assert_eq!(idx.core(p), others[min_pts - 1]);
            }
        }

        #[test]
        fn rdist_symmetric_and_dominating((rows, min_pts) in points()) {
            let n = rows.len();
            let ds = Dataset::from_rows("p", &rows, vec![Class::Cluster(0); n]).unwrap();
            let idx = NeighborhoodIndex::build(&ds, min_pts).unwrap();
            for p in 0..n {
                prop_assert_eq!(idx.dist(p, p), 0.0);
                for q in 0..n {
                    let r = idx.rdist(p, q);
                    prop_assert_eq!(r, idx.rdist(q, p));
                    prop_assert!(r >= idx.dist(p, q));
                    prop_assert!(r >= idx.core(p) && r >= idx.core(q));
                }
            }
        }

        #[test]
        fn reachable_at_reach_distance((rows, min_pts) in points(), a in 0usize..30, b in 0usize..30) {
            let n = rows.len();
            let ds = Dataset::from_rows("p", &rows, vec![Class::Cluster(0); n]).unwrap();
            let idx = NeighborhoodIndex::build(&ds, min_pts).unwrap();
            let (p, q) = (a % n, b % n);
            prop_assert!(idx.is_density_reachable(p, q, idx.rdist(p, q)).unwrap());
        }
    }
}
