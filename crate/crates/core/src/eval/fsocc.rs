//! Few-shot one-class classification: adapt on `K` positives, score a
//! query of positives and negatives, report AUROC plus F1 and accuracy at
//! thresholds calibrated on validation episodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auroc, calibrate_threshold, f1_and_acc, EpisodeReport, ThresholdMetric};
use crate::baselines::proto_fit;
use crate::episode::{derive_seed, rng_for, sample_episode, Episode, TaskConfig};
use crate::error::{Error, Result};
use crate::feature_store::{FeatureCorpus, Split};
use crate::hyperclass::{adapt, adapt_transductive, AdaptConfig, HyperClassParams};
use crate::linear::{dot, norm, sigmoid};

/// Scorers that need positives only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneClassMethod {
    Hc,
    Proto,
}

impl std::str::FromStr for OneClassMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc" => Ok(OneClassMethod::Hc),
            "proto" => Ok(OneClassMethod::Proto),
            other => Err(Error::InvalidConfig(format!(
                "unknown one-class method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FsoccConfig {
    pub shots: usize,
    pub episodes: usize,
    pub calibration_episodes: usize,
    pub transductive: bool,
    pub method: OneClassMethod,
    pub adapt: AdaptConfig,
    pub seed: u64,
}

impl Default for FsoccConfig {
    fn default() -> Self {
        Self {
            shots: 5,
            episodes: 10_000,
            calibration_episodes: 500,
            transductive: false,
            method: OneClassMethod::Hc,
            adapt: AdaptConfig::default(),
            seed: 0,
        }
    }
}

impl FsoccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 || self.calibration_episodes < 1 {
            return Err(Error::InvalidConfig(
                "episodes and calibration_episodes must be at least 1".into(),
            ));
        }
        self.adapt.validate()?;
        self.task().validate()
    }

    pub fn task(&self) -> TaskConfig {
        TaskConfig {
            seed: self.seed,
            ..TaskConfig::fsocc(self.shots)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsoccReport {
    pub auroc: EpisodeReport,
    pub f1: EpisodeReport,
    pub acc: EpisodeReport,
}

/// Query probabilities in `[0, 1]` for one episode.
pub fn score_episode(
    ep: &Episode,
    params: Option<&HyperClassParams>,
    cfg: &FsoccConfig,
) -> Result<Vec<f64>> {
    let positives = ep.support_positives();
    match cfg.method {
        OneClassMethod::Hc => {
            let init = params.ok_or_else(|| Error::InvalidConfig("the hc method needs a checkpoint".into()))?;
            let adapted = if cfg.transductive {
                adapt_transductive(init, &positives, &ep.query_features, &cfg.adapt)?
            } else {
                adapt(init, &ep.support_set(), &cfg.adapt)?
            };
            let w = adapted.composed_weights();
            Ok(ep.query_features.rows().map(|x| sigmoid(dot(&w, x))).collect())
        }
        OneClassMethod::Proto => {
            // cosine to the centroid, mapped from [-1, 1] onto [0, 1]
            let c = proto_fit(&positives)?.weights;
            let cn = norm(&c);
            Ok(ep
                .query_features
                .rows()
                .map(|x| {
                    let d = cn * norm(x);
                    if d == 0.0 {
                        0.5
                    } else {
                        0.5 * (1.0 + dot(&c, x) / d)
                    }
                })
                .collect())
        }
    }
}

fn scored_episodes(
    corpus: &FeatureCorpus,
    params: Option<&HyperClassParams>,
    cfg: &FsoccConfig,
    split: Split,
    count: usize,
    stream: u64,
) -> Result<Vec<(Vec<f64>, Vec<bool>)>> {
    let task = cfg.task();
    let base = derive_seed(cfg.seed, stream);
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let ep = sample_episode(corpus, split, &task, &mut rng_for(base, i))?;
            Ok((score_episode(&ep, params, cfg)?, ep.query_binary()))
        })
        .collect()
}

pub fn run_fsocc(
    corpus: &FeatureCorpus,
    params: Option<&HyperClassParams>,
    cfg: &FsoccConfig,
) -> Result<FsoccReport> {
    cfg.validate()?;
    let calib = scored_episodes(corpus, params, cfg, Split::Val, cfg.calibration_episodes, 0xca1)?;
    let t_f1 = calibrate_threshold(&calib, ThresholdMetric::F1)?;
    let t_acc = calibrate_threshold(&calib, ThresholdMetric::Acc)?;
    let test = scored_episodes(corpus, params, cfg, Split::Test, cfg.episodes, 0x7e57)?;
    let mut au = Vec::with_capacity(test.len());
    let mut f1 = Vec::with_capacity(test.len());
    let mut acc = Vec::with_capacity(test.len());
    for (s, y) in &test {
        au.push(auroc(s, y)?);
        f1.push(f1_and_acc(s, y, t_f1)?.0);
        acc.push(f1_and_acc(s, y, t_acc)?.1);
    }
    Ok(FsoccReport {
        auroc: EpisodeReport::from_values("auroc", &au, None),
        f1: EpisodeReport::from_values("f1", &f1, Some(t_f1)),
        acc: EpisodeReport::from_values("acc", &acc, Some(t_acc)),
    })
}
