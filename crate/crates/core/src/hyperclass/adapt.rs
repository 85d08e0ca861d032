use serde::{Deserialize, Serialize};

use super::{grads, GradientTerms, HyperClassParams, TransductiveLoss};
use crate::error::{Error, Result};
use crate::linear::{FeatureSet, LabeledSet};

/// Which parameter blocks an adaptation may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSet {
    pub v: bool,
    pub p: bool,
    pub b: bool,
}

impl ParamSet {
    pub const ALL: ParamSet = ParamSet {
        v: true,
        p: true,
        b: true,
    };
    /// Meta-test default: `v` stays fixed.
    pub const HEAD: ParamSet = ParamSet {
        v: false,
        p: true,
        b: true,
    };
    pub const NONE: ParamSet = ParamSet {
        v: false,
        p: false,
        b: false,
    };

    pub fn is_empty(&self) -> bool {
        !(self.v || self.p || self.b)
    }

    /// Parse a compact spelling such as `"vpb"`, `"pb"` or `"P,b"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = ParamSet::NONE;
        for ch in s.chars() {
            match ch {
                'v' | 'V' => out.v = true,
                'p' | 'P' => out.p = true,
                'b' | 'B' => out.b = true,
                ',' | ' ' | '+' => {}
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown parameter block {other:?} in {s:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    pub steps: usize,
    pub inner_lr: f64,
    pub l2_weight: f64,
    pub adapt_set: ParamSet,
    pub transductive: bool,
    pub entropy_weight: f64,
    /// Use the full binary entropy for the unlabeled term instead of `−ŷ ln ŷ`.
    pub full_entropy: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            steps: 5,
            inner_lr: 0.5,
            l2_weight: 1e-4,
            adapt_set: ParamSet::HEAD,
            transductive: false,
            entropy_weight: 0.5,
            full_entropy: false,
        }
    }
}

impl AdaptConfig {
    /// Inner loop used during meta-training: all three blocks adapt.
    pub fn meta_train() -> Self {
        Self {
            adapt_set: ParamSet::ALL,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps > 0 && self.adapt_set.is_empty() {
            return Err(Error::InvalidConfig(
                "adaptation steps requested with an empty adapt set".into(),
            ));
        }
        if !(self.inner_lr > 0.0) || !self.inner_lr.is_finite() {
            return Err(Error::InvalidConfig("inner_lr must be positive".into()));
        }
        if !(self.l2_weight >= 0.0) {
            return Err(Error::InvalidConfig("l2_weight must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.entropy_weight) {
            return Err(Error::InvalidConfig("entropy_weight must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn transductive_loss(&self) -> TransductiveLoss {
        TransductiveLoss {
            entropy_weight: self.entropy_weight,
            full_entropy: self.full_entropy,
        }
    }
}

fn step(params: &mut HyperClassParams, g: &GradientTerms, lr: f64, set: ParamSet) {
    let apply = |theta: &mut [f64], grad: &[f64]| {
        for (t, gi) in theta.iter_mut().zip(grad) {
            *t -= lr * gi;
        }
    };
    if set.v {
        apply(&mut params.v, &g.dv);
    }
    if set.p {
        apply(&mut params.p, &g.dp);
    }
    if set.b {
        apply(&mut params.b, &g.db);
    }
}

fn run<F>(params: &HyperClassParams, cfg: &AdaptConfig, mut grad_fn: F) -> Result<HyperClassParams>
where
    F: FnMut(&HyperClassParams) -> Result<GradientTerms>,
{
    cfg.validate()?;
    params.validate()?;
    let mut out = params.clone();
    for k in 0..cfg.steps {
        let g = grad_fn(&out)?;
        if !g.loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss at adaptation step {k}")));
        }
        step(&mut out, &g, cfg.inner_lr, cfg.adapt_set);
        if !out.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite parameters after adaptation step {k}"
            )));
        }
    }
    Ok(out)
}

/// Full-batch gradient descent on the support BCE (+ L2), updating only the
/// blocks in `cfg.adapt_set`. Untouched blocks are returned bit-identical.
pub fn adapt(params: &HyperClassParams, support: &LabeledSet, cfg: &AdaptConfig) -> Result<HyperClassParams> {
    if support.is_empty() {
        return Err(Error::Empty("support set"));
    }
    run(params, cfg, |p| grads(p, support, cfg.l2_weight))
}

/// Gradient descent on the transductive objective over labeled positives and
/// unlabeled query features.
pub fn adapt_transductive(
    params: &HyperClassParams,
    support_positives: &FeatureSet,
    unlabeled: &FeatureSet,
    cfg: &AdaptConfig,
) -> Result<HyperClassParams> {
    let loss = cfg.transductive_loss();
    if support_positives.is_empty() {
        return Err(Error::Empty("transductive support set"));
    }
    if unlabeled.is_empty() {
        return Err(Error::Empty("transductive unlabeled set"));
    }
    run(params, cfg, |p| loss.grads(p, support_positives, unlabeled, cfg.l2_weight))
}
