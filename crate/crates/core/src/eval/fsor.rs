//! Few-shot open-set recognition, negative-detection subtask: one head per
//! known class adapted on that class alone, in-set score = max over heads,
//! AUROC of known versus unknown queries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fsocc::OneClassMethod;
use super::metrics::{auroc, EpisodeReport};
use crate::baselines::proto_fit;
use crate::episode::{derive_seed, rng_for, sample_episode, Episode, TaskConfig};
use crate::error::{Error, Result};
use crate::feature_store::{FeatureCorpus, Split};
use crate::hyperclass::{adapt, AdaptConfig, FsorHeads, HyperClassParams};
use crate::linear::{dot, norm, LabeledSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FsorConfig {
    pub ways: usize,
    pub shots: usize,
    pub episodes: usize,
    pub method: OneClassMethod,
    /// `v` is always held fixed so that the heads share it.
    pub adapt: AdaptConfig,
    pub seed: u64,
}

impl Default for FsorConfig {
    fn default() -> Self {
        Self {
            ways: 5,
            shots: 1,
            episodes: 600,
            method: OneClassMethod::Hc,
            adapt: AdaptConfig::default(),
            seed: 0,
        }
    }
}

impl FsorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        self.head_adapt().validate()?;
        self.task().validate()
    }

    pub fn task(&self) -> TaskConfig {
        TaskConfig {
            seed: self.seed,
            ..TaskConfig::fsor(self.ways, self.shots)
        }
    }

    fn head_adapt(&self) -> AdaptConfig {
        let mut a = self.adapt.clone();
        a.adapt_set.v = false;
        a
    }
}

/// In-set scores of the query (higher = more likely a known class).
pub fn score_episode(ep: &Episode, params: Option<&HyperClassParams>, cfg: &FsorConfig) -> Result<Vec<f64>> {
    let weights: Vec<Vec<f64>> = match cfg.method {
        OneClassMethod::Hc => {
            let init = params.ok_or_else(|| Error::InvalidConfig("the hc method needs a checkpoint".into()))?;
            let head_cfg = cfg.head_adapt();
            let mut heads = FsorHeads::new(init.v.clone());
            for &c in &ep.positive_classes {
                let feats = ep.support_of_class(c);
                let n = feats.len();
                let support = LabeledSet::from_parts(feats, vec![true; n])?;
                heads.push(adapt(init, &support, &head_cfg)?)?;
            }
            heads.head_weights()
        }
        OneClassMethod::Proto => ep
            .positive_classes
            .iter()
            .map(|&c| {
                let w = proto_fit(&ep.support_of_class(c))?.weights;
                let n = norm(&w);
                Ok(w.iter().map(|x| if n > 0.0 { x / n } else { 0.0 }).collect())
            })
            .collect::<Result<_>>()?,
    };
    // max logit orders queries exactly as max probability without saturation ties
    Ok(ep
        .query_features
        .rows()
        .map(|x| {
            let scale = match cfg.method {
                OneClassMethod::Hc => 1.0,
                OneClassMethod::Proto => {
                    let n = norm(x);
                    if n > 0.0 {
                        1.0 / n
                    } else {
                        0.0
                    }
                }
            };
            weights
                .iter()
                .map(|w| scale * dot(w, x))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

pub fn run_fsor(corpus: &FeatureCorpus, params: Option<&HyperClassParams>, cfg: &FsorConfig) -> Result<EpisodeReport> {
    cfg.validate()?;
    let task = cfg.task();
    let base = derive_seed(cfg.seed, 0xf50);
    let values: Vec<f64> = (0..cfg.episodes as u64)
        .into_par_iter()
        .map(|i| {
            let ep = sample_episode(corpus, Split::Test, &task, &mut rng_for(base, i))?;
            let s = score_episode(&ep, params, cfg)?;
            auroc(&s, &ep.query_binary())
        })
        .collect::<Result<_>>()?;
    Ok(EpisodeReport::from_values("auroc", &values, None))
}
