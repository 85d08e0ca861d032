//! The decomposed classifier `W = P·v + b`.
//!
//! `v` is a task-agnostic global classifier, `P` a square projection head
//! and `b` a bias vector; a task-specific linear classifier is obtained by
//! composing the three and predicting `σ(Wᵀx)`. All arithmetic is `f64`.

mod adapt;
pub mod checkpoint;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{axpy, dot, log_sigmoid, sigmoid, FeatureSet, LabeledSet, LinearClassifier};

pub use adapt::{adapt, adapt_transductive, AdaptConfig, ParamSet};
pub use checkpoint::Checkpoint;

/// The triple `(v, P, b)`; `P` is stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperClassParams {
    pub dim: usize,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub b: Vec<f64>,
}

impl HyperClassParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            v: vec![0.0; dim],
            p: vec![0.0; dim * dim],
            b: vec![0.0; dim],
        }
    }

    /// Identity head: `P = I`, `v = 0`, `b = 0`.
    pub fn identity(dim: usize) -> Self {
        let mut s = Self::zeros(dim);
        for i in 0..dim {
            s.p[i * dim + i] = 1.0;
        }
        s
    }

    /// Default initialization: `v ~ N(0, 1/d)`, `P = I + N(0, 0.01²)`, `b = 0`.
    pub fn init<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut s = Self::identity(dim);
        let v_std = 1.0 / (dim as f64).sqrt();
        for x in s.v.iter_mut() {
            *x = v_std * rng.sample::<f64, _>(StandardNormal);
        }
        for x in s.p.iter_mut() {
            *x += 0.01 * rng.sample::<f64, _>(StandardNormal);
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.v.len() != d || self.b.len() != d || self.p.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: self.v.len(),
            });
        }
        if !self.is_finite() {
            return Err(Error::Numerical("non-finite classifier parameters".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.v
            .iter()
            .chain(&self.p)
            .chain(&self.b)
            .all(|x| x.is_finite())
    }

    #[inline]
    pub fn p_at(&self, row: usize, col: usize) -> f64 {
        self.p[row * self.dim + col]
    }

    /// `P·y`
    pub fn p_mul(&self, y: &[f64]) -> Vec<f64> {
        self.p.chunks_exact(self.dim).map(|r| dot(r, y)).collect()
    }

    /// `Pᵀ·y`
    pub fn pt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (row, &yi) in self.p.chunks_exact(self.dim).zip(y) {
            axpy(yi, row, &mut out);
        }
        out
    }

    /// `W = P·v + b`.
    pub fn composed_weights(&self) -> Vec<f64> {
        let mut w = self.p_mul(&self.v);
        for (wi, bi) in w.iter_mut().zip(&self.b) {
            *wi += bi;
        }
        w
    }

    /// The linear classifier induced by these parameters.
    pub fn compose(&self) -> LinearClassifier {
        LinearClassifier::new(self.composed_weights())
    }

    /// Sum of squares over all three parameter blocks.
    pub fn sq_norm(&self) -> f64 {
        dot(&self.v, &self.v) + dot(&self.p, &self.p) + dot(&self.b, &self.b)
    }

    /// Every entry rounded to the nearest `f32`, the checkpoint storage precision.
    pub fn round_to_f32(&self) -> Self {
        let r = |xs: &[f64]| xs.iter().map(|&x| f64::from(x as f32)).collect();
        Self {
            dim: self.dim,
            v: r(&self.v),
            p: r(&self.p),
            b: r(&self.b),
        }
    }
}

/// Gradients of a loss with respect to `(v, P, b)` plus the per-sample
/// BCE coefficients `α = 1 − σ(Wᵀx)` and `λ = α` (positive) / `α − 1`
/// (negative). Only the BCE objective fills `lambda`/`alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTerms {
    pub dv: Vec<f64>,
    pub dp: Vec<f64>,
    pub db: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub loss: f64,
}

/// Chain rule from `∂L/∂W` to the three blocks, plus `2·l2·θ`.
fn backprop(params: &HyperClassParams, grad_w: &[f64], l2_weight: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = params.dim;
    let mut dv = params.pt_mul(grad_w);
    let mut dp = vec![0.0; d * d];
    for (i, row) in dp.chunks_exact_mut(d).enumerate() {
        let gi = grad_w[i];
        for (x, vj) in row.iter_mut().zip(&params.v) {
            *x = gi * vj;
        }
    }
    let mut db = grad_w.to_vec();
    if l2_weight > 0.0 {
        let k = 2.0 * l2_weight;
        axpy(k, &params.v, &mut dv);
        axpy(k, &params.p, &mut dp);
        axpy(k, &params.b, &mut db);
    }
    (dv, dp, db)
}

fn l2_penalty(params: &HyperClassParams, l2_weight: f64) -> f64 {
    if l2_weight > 0.0 {
        l2_weight * params.sq_norm()
    } else {
        0.0
    }
}

/// Analytic batch-mean gradients of BCE (+ `l2_weight·‖θ‖²`).
///
/// With `g = (1/n) Σ λ_x x`: `∇v = −Pᵀg`, `∇P = −g vᵀ`, `∇b = −g`.
pub fn grads(params: &HyperClassParams, batch: &LabeledSet, l2_weight: f64) -> Result<GradientTerms> {
    if batch.is_empty() {
        return Err(Error::Empty("gradient batch"));
    }
    if batch.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            actual: batch.dim(),
        });
    }
    let w = params.composed_weights();
    let n = batch.len() as f64;
    let mut g = vec![0.0; params.dim];
    let mut lambda = Vec::with_capacity(batch.len());
    let mut alpha = Vec::with_capacity(batch.len());
    let mut loss = 0.0;
    for (x, y) in batch.iter() {
        let z = dot(&w, x);
        let a = 1.0 - sigmoid(z);
        let l = if y { a } else { a - 1.0 };
        loss -= if y { log_sigmoid(z) } else { log_sigmoid(-z) };
        axpy(l / n, x, &mut g);
        lambda.push(l);
        alpha.push(a);
    }
    // ∂L/∂W = −g
    g.iter_mut().for_each(|x| *x = -*x);
    let (dv, dp, db) = backprop(params, &g, l2_weight);
    Ok(GradientTerms {
        dv,
        dp,
        db,
        lambda,
        alpha,
        loss: loss / n + l2_penalty(params, l2_weight),
    })
}

/// Batch-mean BCE (+ L2), used as the finite-difference reference objective.
pub fn bce_objective(params: &HyperClassParams, batch: &LabeledSet, l2_weight: f64) -> f64 {
    let w = params.composed_weights();
    let mut loss = 0.0;
    for (x, y) in batch.iter() {
        let z = dot(&w, x);
        loss -= if y { log_sigmoid(z) } else { log_sigmoid(-z) };
    }
    loss / batch.len() as f64 + l2_penalty(params, l2_weight)
}

/// The transductive objective: positive log-likelihood on the labeled support
/// plus a confidence term on unlabeled queries,
///
/// `L = (1−w)·mean_s(−ln ŷ) + w·mean_q(h(ŷ))`, with `h(p) = −p ln p`
/// (or the full binary entropy when `full_entropy` is set). `w = 0.5`
/// weighs both sides equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransductiveLoss {
    pub entropy_weight: f64,
    pub full_entropy: bool,
}

impl Default for TransductiveLoss {
    fn default() -> Self {
        Self {
            entropy_weight: 0.5,
            full_entropy: false,
        }
    }
}

impl TransductiveLoss {
    /// Per-sample unlabeled term and its derivative with respect to the logit.
    fn unlabeled_term(&self, z: f64) -> (f64, f64) {
        let p = sigmoid(z);
        let lp = log_sigmoid(z);
        let dp_dz = p * (1.0 - p);
        if self.full_entropy {
            let lq = log_sigmoid(-z);
            (-p * lp - (1.0 - p) * lq, -dp_dz * z)
        } else {
            (-p * lp, -(lp + 1.0) * dp_dz)
        }
    }

    fn check(&self, params: &HyperClassParams, support: &FeatureSet, unlabeled: &FeatureSet) -> Result<()> {
        if support.is_empty() {
            return Err(Error::Empty("transductive support set"));
        }
        if unlabeled.is_empty() {
            return Err(Error::Empty("transductive unlabeled set"));
        }
        for d in [support.dim(), unlabeled.dim()] {
            if d != params.dim {
                return Err(Error::DimensionMismatch {
                    expected: params.dim,
                    actual: d,
                });
            }
        }
        Ok(())
    }

    pub fn objective(
        &self,
        params: &HyperClassParams,
        support_positives: &FeatureSet,
        unlabeled: &FeatureSet,
        l2_weight: f64,
    ) -> Result<f64> {
        self.check(params, support_positives, unlabeled)?;
        let w = params.composed_weights();
        let sup: f64 = support_positives
            .rows()
            .map(|x| -log_sigmoid(dot(&w, x)))
            .sum::<f64>()
            / support_positives.len() as f64;
        let unl: f64 = unlabeled
            .rows()
            .map(|x| self.unlabeled_term(dot(&w, x)).0)
            .sum::<f64>()
            / unlabeled.len() as f64;
        Ok((1.0 - self.entropy_weight) * sup + self.entropy_weight * unl + l2_penalty(params, l2_weight))
    }

    pub fn grads(
        &self,
        params: &HyperClassParams,
        support_positives: &FeatureSet,
        unlabeled: &FeatureSet,
        l2_weight: f64,
    ) -> Result<GradientTerms> {
        self.check(params, support_positives, unlabeled)?;
        let w = params.composed_weights();
        let mut grad_w = vec![0.0; params.dim];
        let ws = (1.0 - self.entropy_weight) / support_positives.len() as f64;
        let wu = self.entropy_weight / unlabeled.len() as f64;
        let mut loss = 0.0;
        for x in support_positives.rows() {
            let z = dot(&w, x);
            loss -= ws * log_sigmoid(z);
            // d/dz −ln σ(z) = −(1 − σ(z))
            axpy(-ws * (1.0 - sigmoid(z)), x, &mut grad_w);
        }
        for x in unlabeled.rows() {
            let (h, dh) = self.unlabeled_term(dot(&w, x));
            loss += wu * h;
            axpy(wu * dh, x, &mut grad_w);
        }
        let (dv, dp, db) = backprop(params, &grad_w, l2_weight);
        Ok(GradientTerms {
            dv,
            dp,
            db,
            lambda: Vec::new(),
            alpha: Vec::new(),
            loss: loss + l2_penalty(params, l2_weight),
        })
    }
}

/// One projection head per known class sharing a global `v`; the in-set
/// probability of a sample is the maximum over heads.
#[derive(Debug, Clone, PartialEq)]
pub struct FsorHeads {
    pub shared_v: Vec<f64>,
    pub per_class_p: Vec<Vec<f64>>,
    pub per_class_b: Vec<Vec<f64>>,
}

impl FsorHeads {
    pub fn new(shared_v: Vec<f64>) -> Self {
        Self {
            shared_v,
            per_class_p: Vec::new(),
            per_class_b: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.shared_v.len()
    }

    pub fn len(&self) -> usize {
        self.per_class_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_class_p.is_empty()
    }

    /// Add the head `(P, b)` of an adapted parameter set; its `v` must match.
    pub fn push(&mut self, head: HyperClassParams) -> Result<()> {
        if head.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: head.dim,
            });
        }
        if head.v != self.shared_v {
            return Err(Error::InvalidConfig(
                "open-set heads must share the global vector v".into(),
            ));
        }
        self.per_class_p.push(head.p);
        self.per_class_b.push(head.b);
        Ok(())
    }

    /// Composed weights of every head.
    pub fn head_weights(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        self.per_class_p
            .iter()
            .zip(&self.per_class_b)
            .map(|(p, b)| {
                p.chunks_exact(d)
                    .zip(b)
                    .map(|(row, bi)| dot(row, &self.shared_v) + bi)
                    .collect()
            })
            .collect()
    }

    /// `max_c σ((P_c v + b_c)ᵀ x)`.
    pub fn in_set_score(&self, x: &[f64]) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::Empty("open-set head list"));
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .head_weights()
            .iter()
            .map(|w| sigmoid(dot(w, x)))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}
