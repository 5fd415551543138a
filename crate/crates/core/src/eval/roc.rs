use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result};

fn check_scores(target: &[f64], negative: &[f64]) -> Result<()> {
    if target.is_empty() || negative.is_empty() {
        return Err(Error::Input(alloc::format!(
            "AUROC needs target and negative scores (got {} and {})",
            target.len(),
            negative.len()
        )));
    }
    if target.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::Input("NaN score".into()));
    }
    Ok(())
}

/// All scores tagged with their class, sorted ascending.
fn pooled(target: &[f64], negative: &[f64]) -> Vec<(f64, bool)> {
    let mut all: Vec<(f64, bool)> = target
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    all
}

/// Twice the Mann-Whitney U statistic of `target` over `negative`: the
/// number of (target, negative) pairs where the target scores higher, times
/// two, plus one for every tied pair. Exact integer.
///
/// Computed from average ranks over tie groups.
pub fn mann_whitney_u2(target: &[f64], negative: &[f64]) -> Result<u64> {
    check_scores(target, negative)?;
    let all = pooled(target, negative);
    // doubled rank sum of the target scores; a tie group occupying 1-based
    // ranks s+1..=e has average rank (s+1+e)/2
    let mut rank_sum2: u64 = 0;
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].0 == all[start].0 {
            end += 1;
        }
        let targets = all[start..end].iter().filter(|(_, t)| *t).count() as u64;
        rank_sum2 += targets * (start as u64 + 1 + end as u64);
        start = end;
    }
    let n = target.len() as u64;
    Ok(rank_sum2 - n * (n + 1))
}

/// Probability that a random target outscores a random negative, ties
/// counted one half.
pub fn auroc(target: &[f64], negative: &[f64]) -> Result<f64> {
    let u2 = mann_whitney_u2(target, negative)?;
    Ok(u2 as f64 / (2 * target.len() * negative.len()) as f64)
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one per distinct
/// score threshold.
pub fn roc_curve(target: &[f64], negative: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_scores(target, negative)?;
    let mut all = pooled(target, negative);
    all.reverse();
    let (n_pos, n_neg) = (target.len() as f64, negative.len() as f64);
    let mut points = alloc::vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    Ok(points)
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        assert_eq!(auroc(&[0.9, 0.8], &[0.3, 0.1]).unwrap(), 1.0);
        let roc = roc_curve(&[0.9, 0.8], &[0.3, 0.1]).unwrap();
        assert!(roc.contains(&(0.0, 1.0)));
    }

    #[test]
    fn all_ties() {
        assert_eq!(auroc(&[0.4, 0.4, 0.4], &[0.4, 0.4]).unwrap(), 0.5);
    }

    #[test]
    fn enumerated_pairs() {
        // pairs: (0.9,0.6) (0.9,0.2) (0.4,0.2) win, (0.4,0.6) loses -> 3/4
        assert_eq!(auroc(&[0.9, 0.4], &[0.6, 0.2]).unwrap(), 0.75);
    }

    #[test]
    fn single_pair_curve() {
        let roc = roc_curve(&[0.7], &[0.2]).unwrap();
        assert_eq!(roc, alloc::vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(auroc(&[], &[0.1]), Err(Error::Input(_))));
        assert!(matches!(auroc(&[f64::NAN], &[0.1]), Err(Error::Input(_))));
        assert!(roc_curve(&[0.1], &[]).is_err());
    }

    #[test]
    fn signed_zero_ties() {
        assert_eq!(auroc(&[0.0], &[-0.0]).unwrap(), 0.5);
    }
}
