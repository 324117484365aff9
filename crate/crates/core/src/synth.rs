//! Seeded synthetic datasets for desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Class, Dataset};
use crate::error::{Error, Result};

/// Two interleaving half circles with Gaussian jitter plus uniform background
/// outliers.
///
/// `n` normal points are split evenly between the moons (cluster ids 0 and
/// 1). `round(outlier_fraction * n)` outliers are drawn uniformly from the
/// box `[-1.5, 2.5] x [-1.0, 1.5]` and appended after the normals.
pub fn two_moons(n: usize, noise: f64, outlier_fraction: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::param("n", "need at least two normal points"));
    }
    if noise.is_nan() || noise < 0.0 {
        return Err(Error::param("noise", format!("{noise} must be >= 0")));
    }
    if !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(Error::param(
            "outlier_fraction",
            format!("{outlier_fraction} is outside [0, 1]"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::param("noise", e.to_string()))?;
    let upper = n / 2;
    let lower = n - upper;
    let mut values = Vec::with_capacity(2 * n);
    let mut truth = Vec::with_capacity(n);
    let steps = |m: usize, i: usize| {
        if m > 1 {
            std::f64::consts::PI * i as f64 / (m - 1) as f64
        } else {
            0.0
        }
    };
    for i in 0..upper {
        let t = steps(upper, i);
        values.push(t.cos() + jitter.sample(&mut rng));
        values.push(t.sin() + jitter.sample(&mut rng));
        truth.push(Class::Cluster(0));
    }
    for i in 0..lower {
        let t = steps(lower, i);
        values.push(1.0 - t.cos() + jitter.sample(&mut rng));
        values.push(0.5 - t.sin() + jitter.sample(&mut rng));
        truth.push(Class::Cluster(1));
    }
    let outliers = (outlier_fraction * n as f64).round() as usize;
    for _ in 0..outliers {
        values.push(rng.gen_range(-1.5..2.5));
        values.push(rng.gen_range(-1.0..1.5));
        truth.push(Class::Outlier);
    }
    Dataset::new("two_moons", 2, values, truth)
}
