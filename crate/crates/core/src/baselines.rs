//! Comparison classifiers: positive centroid ("proto"), logistic regression
//! trained by gradient descent, and Rocchio query refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{axpy, dot, sigmoid, FeatureSet, LabeledSet, LinearClassifier};

/// Centroid of the positive support features.
pub fn proto_fit(support_positives: &FeatureSet) -> Result<LinearClassifier> {
    support_positives
        .mean()
        .map(LinearClassifier::new)
        .ok_or(Error::Empty("positive support set"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrConfig {
    pub steps: usize,
    pub lr: f64,
    pub l2_weight: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: 0.5,
            l2_weight: 1e-4,
        }
    }
}

/// One full-batch gradient step on mean BCE + `l2·‖w‖²`. The intercept is
/// updated (unregularized) only when the classifier carries one.
pub fn lr_step(clf: &mut LinearClassifier, support: &LabeledSet, lr: f64, l2_weight: f64) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Empty("support set"));
    }
    if support.dim() != clf.dim() {
        return Err(Error::DimensionMismatch {
            expected: clf.dim(),
            actual: support.dim(),
        });
    }
    let n = support.len() as f64;
    let c = clf.bias.unwrap_or(0.0);
    let mut gw = vec![0.0; clf.dim()];
    let mut gb = 0.0;
    for (x, y) in support.iter() {
        let r = sigmoid(dot(&clf.weights, x) + c) - if y { 1.0 } else { 0.0 };
        axpy(r / n, x, &mut gw);
        gb += r / n;
    }
    if l2_weight > 0.0 {
        axpy(2.0 * l2_weight, &clf.weights, &mut gw);
    }
    axpy(-lr, &gw, &mut clf.weights);
    if let Some(b) = clf.bias.as_mut() {
        *b -= lr * gb;
    }
    Ok(())
}

/// Logistic regression with a scalar intercept, trained from zero.
pub fn lr_fit(support: &LabeledSet, cfg: &LrConfig) -> Result<LinearClassifier> {
    if support.is_empty() {
        return Err(Error::Empty("support set"));
    }
    let mut clf = LinearClassifier {
        weights: vec![0.0; support.dim()],
        bias: Some(0.0),
    };
    for _ in 0..cfg.steps {
        lr_step(&mut clf, support, cfg.lr, cfg.l2_weight)?;
    }
    if clf.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical("logistic regression diverged".into()));
    }
    Ok(clf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RocchioWeights {
    pub alpha_q: f64,
    pub beta_rel: f64,
    pub gamma_nonrel: f64,
}

impl Default for RocchioWeights {
    fn default() -> Self {
        Self {
            alpha_q: 1.0,
            beta_rel: 0.75,
            gamma_nonrel: 0.15,
        }
    }
}

/// `q' = α·q₀ + β·mean(relevant) − γ·mean(nonrelevant)`; an empty set
/// contributes nothing.
pub fn rocchio_refine(
    q0: &[f64],
    relevant: &FeatureSet,
    nonrelevant: &FeatureSet,
    w: &RocchioWeights,
) -> Result<Vec<f64>> {
    for d in [relevant.dim(), nonrelevant.dim()] {
        if d != q0.len() {
            return Err(Error::DimensionMismatch {
                expected: q0.len(),
                actual: d,
            });
        }
    }
    let mut q: Vec<f64> = q0.iter().map(|x| w.alpha_q * x).collect();
    if let Some(m) = relevant.mean() {
        axpy(w.beta_rel, &m, &mut q);
    }
    if let Some(m) = nonrelevant.mean() {
        axpy(-w.gamma_nonrel, &m, &mut q);
    }
    Ok(q)
}
