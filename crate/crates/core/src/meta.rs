//! First-order MAML over sampled episodes with an Adam outer optimizer.
//!
//! Each meta-batch adapts a copy of the shared initialization on every task's
//! support, takes the query BCE gradient at the adapted parameters, averages
//! those gradients in task order and hands them to Adam. The adapted copies
//! are then discarded.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{derive_seed, rng_for, sample_episode, Episode, TaskConfig, TaskMode};
use crate::error::{Error, Result};
use crate::eval::metrics::{auroc, average_precision};
use crate::feature_store::{FeatureCorpus, Split};
use crate::hyperclass::{adapt, grads, AdaptConfig, Checkpoint, HyperClassParams, ParamSet};

/// Which blocks of the initialization the outer loop may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// No meta-training: the random initialization is returned.
    None,
    /// Only `v` is meta-trained; `P` and `b` stay at their initial values.
    VOnly,
    /// `P` and `b` are meta-trained; `v` stays at its initial value.
    POnly,
    Both,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::None, Ablation::VOnly, Ablation::POnly, Ablation::Both];

    pub fn trained_blocks(self) -> ParamSet {
        match self {
            Ablation::None => ParamSet::NONE,
            Ablation::VOnly => ParamSet {
                v: true,
                p: false,
                b: false,
            },
            Ablation::POnly => ParamSet::HEAD,
            Ablation::Both => ParamSet::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::VOnly => "v_only",
            Ablation::POnly => "p_only",
            Ablation::Both => "both",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ablation::None),
            "v" | "v_only" => Ok(Ablation::VOnly),
            "p" | "p_only" => Ok(Ablation::POnly),
            "both" => Ok(Ablation::Both),
            other => Err(Error::InvalidConfig(format!("unknown ablation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    Ap,
    Auroc,
}

impl SelectionMetric {
    /// AP for retrieval training, AUROC for everything else.
    pub fn for_mode(mode: TaskMode) -> Self {
        match mode {
            TaskMode::Irrf => SelectionMetric::Ap,
            _ => SelectionMetric::Auroc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaTrainConfig {
    pub meta_batches: usize,
    pub tasks_per_batch: usize,
    pub inner: AdaptConfig,
    pub outer_lr: f64,
    pub outer_weight_decay: f64,
    pub ablation: Ablation,
    pub task: TaskConfig,
    /// Defaults to AP for irrf tasks and AUROC otherwise.
    pub selection_metric: Option<SelectionMetric>,
    pub eval_every: usize,
    pub val_episodes: usize,
    /// Adaptation used when scoring validation episodes (meta-test regime).
    pub eval_adapt: AdaptConfig,
    pub seed: u64,
}

impl Default for MetaTrainConfig {
    fn default() -> Self {
        Self {
            meta_batches: 300,
            tasks_per_batch: 100,
            inner: AdaptConfig::meta_train(),
            outer_lr: 0.001,
            outer_weight_decay: 0.001,
            ablation: Ablation::Both,
            task: TaskConfig::irrf(),
            selection_metric: None,
            eval_every: 10,
            val_episodes: 200,
            eval_adapt: AdaptConfig::default(),
            seed: 0,
        }
    }
}

impl MetaTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.tasks_per_batch < 1 {
            return bad("tasks_per_batch must be at least 1");
        }
        if !(self.outer_lr >= 0.0) || !self.outer_lr.is_finite() {
            return bad("outer_lr must be a finite nonnegative rate");
        }
        if !(self.outer_weight_decay >= 0.0) || !self.outer_weight_decay.is_finite() {
            return bad("outer_weight_decay must be finite and nonnegative");
        }
        if self.eval_every < 1 {
            return bad("eval_every must be at least 1");
        }
        if self.val_episodes < 1 {
            return bad("val_episodes must be at least 1");
        }
        if self.task.mode == TaskMode::Fsor {
            return bad("meta-training supports irrf and fsocc tasks");
        }
        self.inner.validate()?;
        self.eval_adapt.validate()?;
        self.task.validate()
    }

    pub fn metric(&self) -> SelectionMetric {
        self.selection_metric
            .unwrap_or_else(|| SelectionMetric::for_mode(self.task.mode))
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One Adam step with decoupled weight decay: `θ ← θ − lr·wd·θ`, then the
/// bias-corrected Adam update.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState, lr: f64, weight_decay: f64) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != grad.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            actual: grad.len(),
        });
    }
    state.t += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for i in 0..theta.len() {
        theta[i] -= lr * weight_decay * theta[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * grad[i];
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    /// 1-based meta-batch index.
    pub batch: usize,
    /// Mean query BCE at the adapted parameters.
    pub query_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaTrainOutcome {
    /// Best validation checkpoint (batch 0 is the initialization).
    pub best: Checkpoint,
    pub final_params: HyperClassParams,
    pub init_params: HyperClassParams,
    pub init_validation: f64,
    pub history: Vec<BatchRecord>,
}

const INIT_STREAM: u64 = 0x1217;
const VAL_STREAM: u64 = 0x7a1d;

/// The initialization used for a given seed; also the `none` ablation.
pub fn initial_params(dim: usize, seed: u64) -> HyperClassParams {
    HyperClassParams::init(dim, &mut rng_for(seed, INIT_STREAM)).round_to_f32()
}

/// Fixed validation episodes for a run seed.
pub fn validation_episodes(corpus: &FeatureCorpus, task: &TaskConfig, count: usize, seed: u64) -> Result<Vec<Episode>> {
    let base = derive_seed(seed, VAL_STREAM);
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_episode(corpus, Split::Val, task, &mut rng_for(base, i)))
        .collect()
}

/// Mean selection metric of `params` adapted on each episode's support.
pub fn validation_score(
    params: &HyperClassParams,
    episodes: &[Episode],
    adapt_cfg: &AdaptConfig,
    metric: SelectionMetric,
) -> Result<f64> {
    let scores: Vec<f64> = episodes
        .par_iter()
        .map(|ep| {
            let adapted = adapt(params, &ep.support_set(), adapt_cfg)?;
            let clf = adapted.compose();
            let s: Vec<f64> = ep
                .query_features
                .rows()
                .map(|x| clf.logit(x))
                .collect::<Result<_>>()?;
            let y = ep.query_binary();
            match metric {
                SelectionMetric::Ap => average_precision(&s, &y),
                SelectionMetric::Auroc => auroc(&s, &y),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

struct TaskGrad {
    dv: Vec<f64>,
    dp: Vec<f64>,
    db: Vec<f64>,
    loss: f64,
}

fn task_gradient(params: &HyperClassParams, ep: &Episode, inner: &AdaptConfig) -> Result<TaskGrad> {
    let adapted = adapt(params, &ep.support_set(), inner)?;
    let query = crate::linear::LabeledSet::from_parts(ep.query_features.clone(), ep.query_binary())?;
    let g = grads(&adapted, &query, 0.0)?;
    Ok(TaskGrad {
        dv: g.dv,
        dp: g.dp,
        db: g.db,
        loss: g.loss,
    })
}

fn sum_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Meta-train the shared initialization. Results are bit-identical for a
/// given corpus, config and seed regardless of thread count: tasks are
/// sampled from per-task seeds and gradients are summed in task order.
pub fn meta_train(corpus: &FeatureCorpus, cfg: &MetaTrainConfig) -> Result<MetaTrainOutcome> {
    cfg.validate()?;
    let d = corpus.dim();
    let metric = cfg.metric();
    let init = initial_params(d, cfg.seed);
    let val = validation_episodes(corpus, &cfg.task, cfg.val_episodes, cfg.seed)?;
    let init_validation = validation_score(&init, &val, &cfg.eval_adapt, metric)?;
    let config_echo = serde_json::to_value(cfg)?;
    let checkpoint = |params: HyperClassParams, score: f64, batch: usize| Checkpoint {
        params,
        ablation: cfg.ablation.as_str().into(),
        config: config_echo.clone(),
        best_validation_score: Some(score),
        meta_batch_index: batch,
    };
    let mut best = checkpoint(init.clone(), init_validation, 0);
    let mut history = Vec::new();
    let blocks = cfg.ablation.trained_blocks();
    if blocks.is_empty() {
        return Ok(MetaTrainOutcome {
            best,
            final_params: init.clone(),
            init_params: init,
            init_validation,
            history,
        });
    }

    let mut params = init.clone();
    let mut adam = [AdamState::new(d), AdamState::new(d * d), AdamState::new(d)];
    let train_base = derive_seed(cfg.seed, 0x7ea1);
    for batch in 1..=cfg.meta_batches {
        let batch_base = derive_seed(train_base, batch as u64);
        let task_grads: Vec<TaskGrad> = (0..cfg.tasks_per_batch as u64)
            .into_par_iter()
            .map(|t| {
                let ep = sample_episode(corpus, Split::Train, &cfg.task, &mut rng_for(batch_base, t))?;
                task_gradient(&params, &ep, &cfg.inner).map_err(|e| match e {
                    Error::Numerical(m) => Error::Numerical(format!("meta-batch {batch}, task {t}: {m}")),
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        let mut dv = vec![0.0; d];
        let mut dp = vec![0.0; d * d];
        let mut db = vec![0.0; d];
        let mut loss = 0.0;
        for g in &task_grads {
            sum_into(&mut dv, &g.dv);
            sum_into(&mut dp, &g.dp);
            sum_into(&mut db, &g.db);
            loss += g.loss;
        }
        let t = cfg.tasks_per_batch as f64;
        for block in [&mut dv, &mut dp, &mut db] {
            block.iter_mut().for_each(|x| *x /= t);
        }
        loss /= t;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite mean query loss at meta-batch {batch}"
            )));
        }
        if blocks.v {
            adam_step(&mut params.v, &dv, &mut adam[0], cfg.outer_lr, cfg.outer_weight_decay)?;
        }
        if blocks.p {
            adam_step(&mut params.p, &dp, &mut adam[1], cfg.outer_lr, cfg.outer_weight_decay)?;
        }
        if blocks.b {
            adam_step(&mut params.b, &db, &mut adam[2], cfg.outer_lr, cfg.outer_weight_decay)?;
        }
        if !params.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite parameters after meta-batch {batch}"
            )));
        }
        let mut record = BatchRecord {
            batch,
            query_loss: loss,
            validation: None,
        };
        if batch % cfg.eval_every == 0 || batch == cfg.meta_batches {
            // checkpoints store f32, so score exactly what would be saved
            let candidate = params.round_to_f32();
            let score = validation_score(&candidate, &val, &cfg.eval_adapt, metric)?;
            record.validation = Some(score);
            if score > best.best_validation_score.unwrap_or(f64::NEG_INFINITY) {
                best = checkpoint(candidate, score, batch);
            }
        }
        history.push(record);
    }
    Ok(MetaTrainOutcome {
        best,
        final_params: params,
        init_params: init,
        init_validation,
        history,
    })
}
