//! Ranking and detection metrics. Every sort is descending by score with
//! ties broken by ascending index (see [`crate::ranking`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::rank_order;

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    Ok(())
}

/// Mean over relevant ranks `r` of precision at `r`.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, i) in rank_order(scores).into_iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::Empty("relevant items for average precision"));
    }
    Ok(sum / hits as f64)
}

/// Relevant fraction of the top `k`; always divided by `k`, so a list
/// shorter than `k` cannot reach 1.
pub fn precision_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    if k == 0 {
        return Err(Error::InvalidConfig("precision@k needs k >= 1".into()));
    }
    let hits = rank_order(scores)
        .into_iter()
        .take(k)
        .filter(|&i| labels[i])
        .count();
    Ok(hits as f64 / k as f64)
}

/// Mann–Whitney estimate of the area under the ROC curve; tied pairs count
/// one half. Pair counts are kept in integer half-units, so the result is
/// the exact ratio rounded once.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidConfig(
            "AUROC needs both positive and negative labels".into(),
        ));
    }
    // ascending sweep over tie groups: each positive beats every negative
    // strictly below it and ties with the negatives in its own group
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut twice_wins: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut g = 0;
    while g < order.len() {
        let mut end = g;
        while end < order.len() && scores[order[end]].total_cmp(&scores[order[g]]).is_eq() {
            end += 1;
        }
        let pos = order[g..end].iter().filter(|&&i| labels[i]).count() as u64;
        let neg = (end - g) as u64 - pos;
        twice_wins += pos * (2 * neg_below + neg);
        neg_below += neg;
        g = end;
    }
    Ok(twice_wins as f64 / (2 * n_pos * n_neg) as f64)
}

/// F1 of the positive class and accuracy, predicting positive when
/// `score >= threshold`. F1 is 0 when there are no true positives.
pub fn f1_and_acc(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    };
    let acc = if scores.is_empty() {
        0.0
    } else {
        (tp + tn) as f64 / scores.len() as f64
    };
    Ok((f1, acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMetric {
    F1,
    Acc,
}

pub const SWEEP_POINTS: usize = 101;

/// Sweep `SWEEP_POINTS` evenly spaced thresholds over `[0, 1]` and return the
/// one maximizing the mean metric over the given `(scores, labels)` episodes.
/// When several consecutive grid points tie for the maximum, the middle of
/// the first such run is returned.
pub fn calibrate_threshold(episodes: &[(Vec<f64>, Vec<bool>)], metric: ThresholdMetric) -> Result<f64> {
    if episodes.is_empty() {
        return Err(Error::Empty("calibration episodes"));
    }
    let grid: Vec<f64> = (0..SWEEP_POINTS)
        .map(|i| i as f64 / (SWEEP_POINTS - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mut total = 0.0;
        for (s, l) in episodes {
            let (f1, acc) = f1_and_acc(s, l, t)?;
            total += match metric {
                ThresholdMetric::F1 => f1,
                ThresholdMetric::Acc => acc,
            };
        }
        values.push(total / episodes.len() as f64);
    }
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = values.iter().position(|&v| v == best).expect("non-empty grid");
    let len = values[start..].iter().take_while(|&&v| v == best).count();
    Ok(grid[start + (len - 1) / 2])
}

/// Mean, spread and 95% normal-approximation interval of per-episode values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation (0 for a single episode).
    pub std: f64,
    pub ci95: f64,
    pub episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl EpisodeReport {
    pub fn from_values(metric: impl Into<String>, values: &[f64], threshold: Option<f64>) -> Self {
        let (mean, std) = mean_std(values);
        let n = values.len();
        Self {
            metric: metric.into(),
            mean,
            std,
            ci95: if n == 0 { 0.0 } else { 1.96 * std / (n as f64).sqrt() },
            episodes: n,
            threshold,
        }
    }
}

/// Mean and sample standard deviation; `(NaN, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ap_cases() {
        let s = [4.0, 3.0, 2.0, 1.0];
        assert!((average_precision(&s, &[true, false, true, false]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(average_precision(&s, &[true, true, false, false]).unwrap(), 1.0);
        assert!(average_precision(&s, &[false; 4]).is_err());
    }

    #[test]
    fn precision_cases() {
        let s: Vec<f64> = (0..60).map(|i| -(i as f64)).collect();
        let all: Vec<bool> = vec![true; 60];
        assert_eq!(precision_at_k(&s, &all, 50).unwrap(), 1.0);
        let alt: Vec<bool> = (0..60).map(|i| i % 2 == 0).collect();
        assert_eq!(precision_at_k(&s, &alt, 50).unwrap(), 0.5);
        assert_eq!(precision_at_k(&s[..40], &all[..40], 50).unwrap(), 0.8);
        assert!(precision_at_k(&s, &all, 0).is_err());
    }

    #[test]
    fn auroc_cases() {
        assert_eq!(auroc(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(auroc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1_and_acc(&[0.9, 0.1], &[true, false], 0.5).unwrap(), (1.0, 1.0));
        assert_eq!(f1_and_acc(&[0.2, 0.1], &[true, false], 0.5).unwrap(), (0.0, 0.5));
        assert!(f1_and_acc(&[0.2], &[true], 1.5).is_err());
    }

    #[test]
    fn sweep_lands_between_clusters() {
        let eps = vec![
            (vec![0.2, 0.25, 0.8, 0.85], vec![false, false, true, true]),
            (vec![0.22, 0.78], vec![false, true]),
        ];
        for m in [ThresholdMetric::F1, ThresholdMetric::Acc] {
            let t = calibrate_threshold(&eps, m).unwrap();
            assert!(t > 0.25 && t < 0.78, "{t}");
        }
    }

    #[test]
    fn report_ci() {
        let r = EpisodeReport::from_values("auroc", &[1.0, 2.0, 3.0, 4.0], None);
        assert_eq!(r.mean, 2.5);
        let std = (5.0f64 / 3.0).sqrt();
        assert!((r.std - std).abs() < 1e-15);
        assert!((r.ci95 - 1.96 * std / 2.0).abs() < 1e-15);
    }
}
