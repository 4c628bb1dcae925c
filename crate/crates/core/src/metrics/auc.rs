use crate::error::{bail, Result};

/// Mann–Whitney estimate of `P(pos > neg)`, ties counted as one half.
pub fn roc_auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() || negative.is_empty() {
        bail!(Stat, "ROC-AUC needs positive and negative scores");
    }
    if positive.iter().chain(negative).any(|v| v.is_nan()) {
        bail!(Stat, "NaN score");
    }
    let mut neg = negative.to_vec();
    neg.sort_by(f64::total_cmp);
    // twice the U statistic, kept integral so the complement sums exactly
    let mut twice_u: u128 = 0;
    for &p in positive {
        let below = neg.partition_point(|&n| n < p) as u128;
        let tied = neg[below as usize..].partition_point(|&n| n <= p) as u128;
        twice_u += 2 * below + tied;
    }
    let pairs = 2 * positive.len() as u128 * negative.len() as u128;
    Ok(twice_u as f64 / pairs as f64)
}
