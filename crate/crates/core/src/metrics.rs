//! Evaluation metrics: ROC AUC, Rand Index and normalized mutual information.
//!
//! Partition metrics accept any hashable id, so `Class` values can be passed
//! directly; `Class::Outlier` then acts as one extra cluster.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Probability that a random positive scores above a random negative, ties
/// counting one half (Mann-Whitney form of the ROC area).
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: positive.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::param("scores", "NaN score"));
    }
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Precondition(format!(
            "AUC needs both classes, got {pos} positive and {neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps tied midranks integral
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let twice_mid = (start + 1 + end) as u128;
        let tied_pos = order[start..end].iter().filter(|&&i| positive[i]).count() as u128;
        twice_rank_sum += twice_mid * tied_pos;
        start = end;
    }
    let (p, q) = (pos as u128, neg as u128);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * q) as f64)
}

type Counts<T> = (HashMap<T, u64>, HashMap<T, u64>, HashMap<(T, T), u64>);

fn contingency<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> Result<Counts<T>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut ca = HashMap::new();
    let mut cb = HashMap::new();
    let mut joint = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_insert(0) += 1;
        *cb.entry(y).or_insert(0) += 1;
        *joint.entry((x, y)).or_insert(0) += 1;
    }
    Ok((ca, cb, joint))
}

fn pairs(c: u64) -> u128 {
    let c = c as u128;
    c * c.saturating_sub(1) / 2
}

/// Fraction of point pairs on which the two partitions agree.
pub fn rand_index<T: Eq + Hash + Copy>(predicted: &[T], truth: &[T]) -> Result<f64> {
    let (ca, cb, joint) = contingency(predicted, truth)?;
    let n = predicted.len() as u64;
    if n < 2 {
        return Err(Error::Precondition(format!(
            "Rand Index needs at least 2 points, got {n}"
        )));
    }
    let both: u128 = joint.values().map(|&c| pairs(c)).sum();
    let same_a: u128 = ca.values().map(|&c| pairs(c)).sum();
    let same_b: u128 = cb.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let apart = total + both - same_a - same_b;
    Ok((both + apart) as f64 / total as f64)
}

/// `2 I(Y;C) / (H(Y) + H(C))`, natural logs; 1 when both partitions are constant.
pub fn nmi<T: Eq + Hash + Copy>(predicted: &[T], truth: &[T]) -> Result<f64> {
    let (ca, cb, joint) = contingency(predicted, truth)?;
    let n = predicted.len();
    if n == 0 {
        return Err(Error::Precondition("NMI of empty partitions".into()));
    }
    let nf = n as f64;
    let entropy = |m: &HashMap<T, u64>| -> f64 {
        let mut counts: Vec<u64> = m.values().copied().collect();
        counts.sort_unstable();
        counts
            .iter()
            .map(|&c| {
                let p = c as f64 / nf;
                -p * p.ln()
            })
            .sum()
    };
    let (ha, hb) = (entropy(&ca), entropy(&cb));
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mut cells: Vec<(u64, u64, u64)> =
        joint.iter().map(|((x, y), &c)| (c, ca[x], cb[y])).collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&(c, a, b)| {
            let c = c as f64;
            (c / nf) * (c * nf / (a as f64 * b as f64)).ln()
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}
