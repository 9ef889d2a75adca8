//! Ranking metrics: AUC in Mann–Whitney form and Precision at a cutoff.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Exact: computed from the sorted scores.
///
/// The complement is formed as `1 − x` from the smaller side, so
/// `auc(p, n) + auc(n, p) == 1.0` holds bit-exactly.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyScoreList);
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // twice the Mann–Whitney U of the positives, kept integral
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u128, 0u128);
        while j < all.len() && all[j].0.total_cmp(&all[i].0).is_eq() {
            if all[j].1 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        twice_u += gp * (2 * neg_below + gn);
        neg_below += gn;
        i = j;
    }
    let pairs = pos.len() as u128 * neg.len() as u128;
    let denom = (2 * pairs) as f64;
    Ok(if twice_u <= pairs {
        twice_u as f64 / denom
    } else {
        1.0 - (2 * pairs - twice_u) as f64 / denom
    })
}

/// Fraction of the top `cutoff` entries that are positive. A tie group
/// straddling the cutoff contributes its positive share of the remaining
/// slots.
pub fn precision_at_flags(is_positive: &[bool], scores: &[f64], cutoff: usize) -> Result<f64> {
    assert_eq!(is_positive.len(), scores.len());
    if cutoff == 0 {
        return Err(Error::Config("precision cutoff must be at least 1".into()));
    }
    if cutoff > scores.len() {
        return Err(Error::RankTooLarge {
            cutoff,
            len: scores.len(),
        });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[cutoff - 1];

    let (mut above, mut above_pos, mut tied, mut tied_pos) = (0u64, 0u64, 0u64, 0u64);
    for (&s, &p) in scores.iter().zip(is_positive) {
        match s.total_cmp(&threshold) {
            std::cmp::Ordering::Greater => {
                above += 1;
                above_pos += u64::from(p);
            }
            std::cmp::Ordering::Equal => {
                tied += 1;
                tied_pos += u64::from(p);
            }
            std::cmp::Ordering::Less => {}
        }
    }
    let slots = cutoff as u64 - above;
    let numer = (above_pos * tied + tied_pos * slots) as f64;
    Ok(numer / (tied * cutoff as u64) as f64)
}

/// Precision over keyed candidates. `cutoff` defaults to `positives.len()`.
pub fn precision_at<K: Eq + Hash>(
    positives: &HashSet<K>,
    ranked: &[(K, f64)],
    cutoff: Option<usize>,
) -> Result<f64> {
    let flags: Vec<bool> = ranked.iter().map(|(k, _)| positives.contains(k)).collect();
    let scores: Vec<f64> = ranked.iter().map(|(_, s)| *s).collect();
    precision_at_flags(&flags, &scores, cutoff.unwrap_or(positives.len()))
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
