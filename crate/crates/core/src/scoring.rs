//! Outlier scores.
//!
//! Three component scores map a raw distance-like quantity `x >= 0` through
//! `exp(-x)` into `(0, 1]`:
//!
//! * reachability score from the bottleneck distance to the closest labeled
//!   normal root,
//! * local-density score from the mean reachability distance to the
//!   `min_pts` reachability-nearest neighbors,
//! * similarity score from the Euclidean distance to the nearest labeled
//!   outlier (0 when no outliers are labeled).
//!
//! The total score blends them as
//! `alpha * (1 - r) + beta * (1 - l) + (1 - alpha - beta) * sim`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabelSet;
use crate::error::{Error, Result};
use crate::metricspace::NeighborhoodIndex;

// slack for lattice points such as 0.7 + 0.3
const WEIGHT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    pub beta: f64,
    pub min_pts: usize,
}

impl ScoreParams {
    pub fn new(alpha: f64, beta: f64, min_pts: usize) -> Result<Self> {
        let p = ScoreParams {
            alpha,
            beta,
            min_pts,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(
                "alpha",
                format!("{} is outside [0, 1]", self.alpha),
            ));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param(
                "beta",
                format!("{} is outside [0, 1]", self.beta),
            ));
        }
        if self.alpha + self.beta > 1.0 + WEIGHT_SLACK {
            return Err(Error::param(
                "alpha+beta",
                format!("{} + {} exceeds 1", self.alpha, self.beta),
            ));
        }
        if self.min_pts == 0 {
            return Err(Error::param("min_pts", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub r_score: Vec<f64>,
    pub l_score: Vec<f64>,
    pub sim_score: Vec<f64>,
    pub t_score: Vec<f64>,
}

impl ScoreTable {
    /// Component scores for every point; `t_score` stays zero until
    /// [`ScoreTable::weigh`] runs.
    pub fn components(idx: &NeighborhoodIndex, labels: &LabelSet, emax: &[f64]) -> Result<Self> {
        if emax.len() != idx.len() {
            return Err(Error::LengthMismatch {
                left: emax.len(),
                right: idx.len(),
            });
        }
        let r_score = r_score(emax)?;
        let l_score = l_score(&local_densities(idx))?;
        let sim_score = (0..idx.len()).map(|q| sim_score(idx, labels, q)).collect();
        Ok(ScoreTable {
            r_score,
            l_score,
            sim_score,
            t_score: vec![0.0; idx.len()],
        })
    }

    pub fn weigh(&mut self, params: &ScoreParams) -> Result<()> {
        self.t_score = t_score(self, params)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.r_score.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_score.is_empty()
    }
}

fn neg_exp(xs: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if let Some(x) = xs.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::param(what, format!("negative or NaN input {x}")));
    }
    Ok(xs.iter().map(|x| (-x).exp()).collect())
}

pub fn r_score(emax: &[f64]) -> Result<Vec<f64>> {
    neg_exp(emax, "emax")
}

pub fn l_score(ld: &[f64]) -> Result<Vec<f64>> {
    neg_exp(ld, "local density")
}

/// Mean reachability distance from `q` to its `min_pts` reachability-nearest
/// neighbors.
pub fn local_density(idx: &NeighborhoodIndex, q: usize) -> Result<f64> {
    let m = idx.min_pts();
    let nn = idx.knn_by_rdist(q, m)?;
    Ok(nn.iter().map(|&p| idx.rdist(p, q)).sum::<f64>() / m as f64)
}

pub fn local_densities(idx: &NeighborhoodIndex) -> Vec<f64> {
    (0..idx.len())
        .into_par_iter()
        .map(|q| local_density(idx, q).expect("index invariants bound q and min_pts"))
        .collect()
}

/// `exp(-d)` with `d` the Euclidean distance to the closest labeled outlier;
/// 0 without labeled outliers.
pub fn sim_score(idx: &NeighborhoodIndex, labels: &LabelSet, q: usize) -> f64 {
    labels
        .outliers()
        .iter()
        .map(|&o| idx.dist(q, o))
        .min_by(f64::total_cmp)
        .map_or(0.0, |d| (-d).exp())
}

pub fn t_score(st: &ScoreTable, params: &ScoreParams) -> Result<Vec<f64>> {
    params.validate()?;
    let (a, b) = (params.alpha, params.beta);
    let c = (1.0 - a - b).max(0.0);
    Ok(st
        .r_score
        .iter()
        .zip(&st.l_score)
        .zip(&st.sim_score)
        .map(|((r, l), s)| (a * (1.0 - r) + b * (1.0 - l) + c * s).clamp(0.0, 1.0))
        .collect())
}
