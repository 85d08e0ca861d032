//! Ranking helpers. Every sort in the crate is descending by score with ties
//! broken by ascending original index, so rankings are bit-reproducible.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::feature_store::FeatureCorpus;
use crate::linear::{dot_f32, norm, LinearClassifier};

#[inline]
fn by_score_desc(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Indices of `scores` in rank order.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(by_score_desc(scores));
    idx
}

/// Rank order restricted to `candidates` (indices into `scores`).
pub fn rank_subset(scores: &[f64], candidates: &[usize]) -> Vec<usize> {
    let mut idx = candidates.to_vec();
    idx.sort_by(by_score_desc(scores));
    idx
}

/// Cosine similarity of every listed corpus row to `query`.
pub fn cosine_scores(corpus: &FeatureCorpus, rows: &[usize], query: &[f64]) -> Vec<f64> {
    let qn = norm(query);
    rows.par_iter()
        .map(|&i| {
            let denom = qn * corpus.row_norm(i);
            if denom == 0.0 {
                0.0
            } else {
                dot_f32(corpus.row(i), query) / denom
            }
        })
        .collect()
}

/// Pre-sigmoid classifier scores of every listed corpus row.
pub fn linear_scores(corpus: &FeatureCorpus, rows: &[usize], clf: &LinearClassifier) -> Vec<f64> {
    let c = clf.bias.unwrap_or(0.0);
    rows.par_iter()
        .map(|&i| dot_f32(corpus.row(i), &clf.weights) + c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_index() {
        assert_eq!(rank_order(&[0.5, 0.9, 0.5, 0.9, 0.1]), vec![1, 3, 0, 2, 4]);
        assert_eq!(rank_subset(&[0.5, 0.9, 0.5, 0.9], &[2, 0, 3]), vec![3, 0, 2]);
    }
}
