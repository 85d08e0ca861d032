//! Shared primitives for binary linear classifiers: the logistic link,
//! clamped binary cross-entropy, dot products and the small feature
//! containers every classifier consumes.
//!
//! Storage may be `f32` (corpus rows) but every accumulation is done in
//! `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clamp used inside [`bce_loss`] only.
pub const BCE_EPS: f64 = 1e-12;

/// Logistic function, branch-on-sign so `exp` never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(z)` without forming `σ(z)` first.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Binary cross-entropy of a probability against a 0/1 label, with the
/// probability clamped to `[ε, 1-ε]`.
#[inline]
pub fn bce_loss(p: f64, y: bool) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product of an `f32` storage row with an `f64` vector, accumulated in `f64`.
#[inline]
pub fn dot_f32(row: &[f32], w: &[f64]) -> f64 {
    debug_assert_eq!(row.len(), w.len());
    row.iter().zip(w).map(|(&x, y)| f64::from(x) * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a * x`
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// An unlabeled set of `dim`-dimensional feature rows (row-major, `f64`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut set = Self::new(dim);
        for r in rows {
            set.push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub(crate) fn push_f32(&mut self, row: &[f32]) {
        debug_assert_eq!(row.len(), self.dim);
        self.data.extend(row.iter().map(|&x| f64::from(x)));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Arithmetic mean of the rows, `None` when empty.
    pub fn mean(&self) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            axpy(1.0, r, &mut m);
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|x| *x /= n);
        Some(m)
    }
}

/// Feature rows with binary relevance labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    features: FeatureSet,
    labels: Vec<bool>,
}

impl LabeledSet {
    pub fn new(dim: usize) -> Self {
        Self {
            features: FeatureSet::new(dim),
            labels: Vec::new(),
        }
    }

    pub fn from_parts(features: FeatureSet, labels: Vec<bool>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn push(&mut self, row: &[f64], label: bool) -> Result<()> {
        self.features.push(row)?;
        self.labels.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], bool)> + '_ {
        self.features.rows().zip(self.labels.iter().copied())
    }

    /// Rows carrying the given label.
    pub fn with_label(&self, label: bool) -> FeatureSet {
        let mut out = FeatureSet::new(self.dim());
        for (x, y) in self.iter() {
            if y == label {
                out.data.extend_from_slice(x);
            }
        }
        out
    }
}

/// A linear binary classifier `σ(wᵀx + c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    /// Scalar intercept; absent for HyperClass, which carries its bias inside `W`.
    pub bias: Option<f64>,
}

impl LinearClassifier {
    pub fn new(weights: Vec<f64>) -> Self {
        Self {
            weights,
            bias: None,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Pre-sigmoid score `wᵀx (+ c)`.
    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(dot(&self.weights, x) + self.bias.unwrap_or(0.0))
    }

    pub fn logit_f32(&self, x: &[f32]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(dot_f32(x, &self.weights) + self.bias.unwrap_or(0.0))
    }

    /// Probability of relevance.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_identities() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((sigmoid(-(3f64.ln())) - 0.25).abs() < 1e-15);
        for z in [-1e3, -700.0, 700.0, 1e3] {
            let s = sigmoid(z);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn log_sigmoid_matches_direct() {
        for z in [-30.0, -2.0, 0.0, 0.3, 5.0, 30.0] {
            assert!((log_sigmoid(z) - sigmoid(z).ln()).abs() < 1e-12);
        }
        assert!(log_sigmoid(-1e3).is_finite());
    }

    #[test]
    fn bce_values() {
        assert!((bce_loss(0.5, true) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_loss(1.0, true) < 1e-11);
        // -ln(1e-12) = 27.631021...
        let l = bce_loss(0.0, true);
        assert!((l - 27.631_021_115_928_547).abs() < 1e-9, "{l}");
        assert!(bce_loss(1.0, false).is_finite());
    }

    #[test]
    fn score_basics() {
        let c = LinearClassifier::zeros(3);
        assert_eq!(c.score(&[1.0, -2.0, 7.0]).unwrap(), 0.5);
        let c = LinearClassifier::new(vec![3f64.ln(), 0.0]);
        assert!((c.score(&[1.0, 5.0]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            c.score(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn mean_of_rows() {
        let s = FeatureSet::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(s.mean().unwrap(), vec![0.5, 0.5]);
        assert!(FeatureSet::new(2).mean().is_none());
    }

    proptest! {
        #[test]
        fn score_monotone_in_logit(a in -50.0f64..50.0, delta in 1e-6f64..10.0) {
            // f64 saturates to exactly 1 above z ≈ 36.7
            prop_assert!(sigmoid(a + delta) >= sigmoid(a));
            if a + delta < 30.0 {
                prop_assert!(sigmoid(a + delta) > sigmoid(a));
            }
        }

        #[test]
        fn bce_finite_on_unit_interval(p in 0.0f64..=1.0, y: bool) {
            let l = bce_loss(p, y);
            prop_assert!(l.is_finite() && l >= 0.0);
        }

        #[test]
        fn f32_dot_matches_naive(xs in prop::collection::vec(-10.0f32..10.0, 1..64)) {
            let w: Vec<f64> = xs.iter().enumerate().map(|(i, _)| (i as f64).sin()).collect();
            let fast = dot_f32(&xs, &w);
            // naive reference: widen everything first, sum in index order
            let mut naive = 0.0f64;
            for i in 0..xs.len() {
                naive += xs[i] as f64 * w[i];
            }
            let scale = xs.iter().zip(&w).map(|(a, b)| (*a as f64 * b).abs()).sum::<f64>().max(1e-300);
            prop_assert!((fast - naive).abs() / scale <= 1e-6);
        }
    }
}
