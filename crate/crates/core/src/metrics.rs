//! Partition agreement (adjusted Rand index), summaries of ARI lists and
//! paired method comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::canonicalize_labels;

/// Default tolerance under which two paired scores count as a tie.
pub const DEFAULT_TIE_TOL: f64 = 1e-12;

/// Minimum number of nonzero paired differences for the normal
/// approximation of the signed-rank statistic.
pub const WILCOXON_MIN_PAIRS: usize = 10;

/// Hubert–Arabie adjusted Rand index between two labelings of the same items.
///
/// Labels may be arbitrary integers. When the chance-corrected denominator
/// vanishes (both labelings are a single cluster, or both are all
/// singletons) the labelings are identical and the index is 1.
pub fn ari(p: &[usize], q: &[usize]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let n = p.len();
    let (p, _) = canonicalize_labels(p);
    let (q, _) = canonicalize_labels(q);
    let kp = p.iter().copied().max().map_or(0, |m| m + 1);
    let kq = q.iter().copied().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; kp * kq];
    for (&a, &b) in p.iter().zip(&q) {
        table[a * kq + b] += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let rows: f64 = table.chunks(kq.max(1)).map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kq)
        .map(|j| pairs((0..kp).map(|i| table[i * kq + j]).sum()))
        .sum();
    let total = pairs(n as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

/// Arithmetic mean and median (midpoint of the two central values for even
/// lengths).
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot summarize an empty list".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    Ok(Summary { mean, median })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub prop_a_wins: f64,
    pub prop_b_wins: f64,
    pub prop_ties: f64,
    /// Two-sided signed-rank p-value, absent when there are too few
    /// nonzero differences for the normal approximation.
    pub p_value: Option<f64>,
}

/// Win, loss and tie proportions of `a` against `b` on paired replicates,
/// plus the signed-rank p-value.
pub fn pairwise_compare(a: &[f64], b: &[f64], tie_tol: f64) -> Result<ComparisonStats> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("no replicates to compare".into()));
    }
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tie tolerance must be >= 0, got {tie_tol}")));
    }
    let (mut wins, mut losses, mut ties) = (0usize, 0usize, 0usize);
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() <= tie_tol {
            ties += 1;
        } else if x > y {
            wins += 1;
        } else {
            losses += 1;
        }
    }
    let n = a.len() as f64;
    let p_value = match wilcoxon_signed_rank(a, b) {
        Ok(p) => Some(p),
        Err(Error::InvalidParameter(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ComparisonStats {
        prop_a_wins: wins as f64 / n,
        prop_b_wins: losses as f64 / n,
        prop_ties: ties as f64 / n,
        p_value,
    })
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped, tied magnitudes get average ranks, and the
/// p-value uses the normal approximation with continuity correction and the
/// tie-corrected variance. If every difference is zero the p-value is 1.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("non-finite paired difference".into()));
    }
    if diffs.is_empty() {
        return Ok(1.0);
    }
    if diffs.len() < WILCOXON_MIN_PAIRS {
        return Err(Error::InvalidParameter(format!(
            "signed-rank test needs at least {WILCOXON_MIN_PAIRS} nonzero differences, got {}",
            diffs.len()
        )));
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let m = diffs.len();
    let mut w_plus = 0.0;
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && diffs[end].abs() == diffs[start].abs() {
            end += 1;
        }
        let t = (end - start) as f64;
        // Average of ranks start+1 ..= end.
        let rank = 0.5 * ((start + 1) + end) as f64;
        w_plus += rank * diffs[start..end].iter().filter(|d| **d > 0.0).count() as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(libm::erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_hand_cases() {
        assert_eq!(ari(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert!((ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(ari(&[0, 0, 0], &[4, 4, 4]).unwrap(), 1.0);
        assert!(ari(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn ari_single_versus_singletons_is_zero() {
        assert_eq!(ari(&[0, 0, 0, 0], &[0, 1, 2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn summaries() {
        assert_eq!(summarize(&[1.0, 1.0, 1.0]).unwrap(), Summary { mean: 1.0, median: 1.0 });
        assert_eq!(summarize(&[0.0, 1.0]).unwrap(), Summary { mean: 0.5, median: 0.5 });
        assert_eq!(summarize(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn comparison_counts() {
        let c = pairwise_compare(&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0], DEFAULT_TIE_TOL).unwrap();
        assert!((c.prop_a_wins - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.prop_ties - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.prop_b_wins, 0.0);
        assert_eq!(c.p_value, None);

        let same = pairwise_compare(&[0.3; 12], &[0.3; 12], DEFAULT_TIE_TOL).unwrap();
        assert_eq!(same.prop_ties, 1.0);
        assert_eq!(same.p_value, Some(1.0));
    }

    #[test]
    fn wilcoxon_constant_shift_is_significant() {
        let b: Vec<f64> = (0..30).map(|i| (i % 7) as f64 * 0.125).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 0.5).collect();
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        // All 30 magnitudes tie, so every rank is positive and the variance
        // loses the tie term (30^3 - 30) / 48.
        let var = 30.0 * 31.0 * 61.0 / 24.0 - (27000.0 - 30.0) / 48.0;
        let z: f64 = (465.0 - 232.5 - 0.5) / f64::sqrt(var);
        let expected = libm::erfc(z / std::f64::consts::SQRT_2);
        assert!((p - expected).abs() < 1e-15);
        assert!(p < 1e-4);
    }

    #[test]
    fn wilcoxon_too_few_pairs_is_rejected() {
        assert!(wilcoxon_signed_rank(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
    }
}
