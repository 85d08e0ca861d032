//! Command-line flags. Every field is optional so that a config file can
//! supply it; defaults are applied after merging and shown in `--help`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "hyperclass", version, about = "Meta-learned relevance-feedback retrieval: training, evaluation, analytic checks and a session service")]
pub struct Cli {
    /// Worker threads for parallel sections [default: available parallelism]
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded Gaussian-cluster feature corpus
    GenSynth(GenSynthArgs),
    /// Meta-train the shared HyperClass initialization
    MetaTrain(MetaTrainArgs),
    /// Simulated relevance-feedback retrieval benchmark
    EvalIrrf(EvalIrrfArgs),
    /// Few-shot one-class classification benchmark
    EvalFsocc(EvalFsoccArgs),
    /// Few-shot open-set recognition benchmark
    EvalFsor(EvalFsorArgs),
    /// Numerical checks of the update-rule identities and gradients
    TheoryCheck(TheoryCheckArgs),
    /// Serve interactive feedback sessions over HTTP
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CorpusArgs {
    /// Corpus directory (or its manifest.json)
    #[arg(long, value_name = "DIR")]
    pub features: Option<PathBuf>,
    /// Use rows as stored instead of scaling them to unit L2 norm [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub no_normalize: Option<bool>,
    /// Skip subtracting the train-split mean before use [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub no_center: Option<bool>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AdaptArgs {
    /// Inner-loop gradient steps [default: 5]
    #[arg(long, value_name = "K")]
    pub inner_steps: Option<usize>,
    /// Inner-loop learning rate [default: 0.5]
    #[arg(long, value_name = "R")]
    pub inner_lr: Option<f64>,
    /// L2 weight in the inner loss [default: 1e-4]
    #[arg(long, value_name = "R")]
    pub l2: Option<f64>,
    /// Parameter blocks adapted per task, e.g. "pb" or "vpb" [default: pb]
    #[arg(long, value_name = "SET")]
    pub adapt_set: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    /// Meta-trained checkpoint (required by the hc method unless --random-init)
    #[arg(long, value_name = "FILE")]
    pub ckpt: Option<PathBuf>,
    /// Use the untrained initialization for --seed instead of a checkpoint [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub random_init: Option<bool>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenSynthArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Number of classes C [default: 50]
    #[arg(long, value_name = "C")]
    pub classes: Option<usize>,
    /// Samples per class [default: 100]
    #[arg(long, value_name = "N")]
    pub per_class: Option<usize>,
    /// Feature dimension d [default: 64]
    #[arg(long, value_name = "D")]
    pub dim: Option<usize>,
    /// Per-coordinate noise standard deviation [default: 0.35]
    #[arg(long, value_name = "S")]
    pub noise: Option<f64>,
    /// Expected norm of a class mean [default: 1.0]
    #[arg(long, value_name = "R")]
    pub mean_scale: Option<f64>,
    /// Train/val/test class fractions [default: 0.6,0.2,0.2]
    #[arg(long, value_name = "A,B,C")]
    pub splits: Option<String>,
    /// Store rows unnormalized [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub no_normalize: Option<bool>,
    /// Generator seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetaTrainArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    /// Task family: irrf or fsocc [default: irrf]
    #[arg(long, value_name = "TASK")]
    pub task: Option<String>,
    /// Support shots K for fsocc tasks [default: 5]
    #[arg(long, value_name = "K")]
    pub shots: Option<usize>,
    /// Meta-batches [default: 300]
    #[arg(long, value_name = "N")]
    pub meta_batches: Option<usize>,
    /// Tasks per meta-batch [default: 100]
    #[arg(long, value_name = "T")]
    pub tasks_per_batch: Option<usize>,
    /// Inner-loop gradient steps [default: 5]
    #[arg(long, value_name = "K")]
    pub inner_steps: Option<usize>,
    /// Inner-loop learning rate [default: 0.5]
    #[arg(long, value_name = "R")]
    pub inner_lr: Option<f64>,
    /// L2 weight in the inner loss [default: 1e-4]
    #[arg(long, value_name = "R")]
    pub l2: Option<f64>,
    /// Outer (Adam) learning rate [default: 0.001]
    #[arg(long, value_name = "R")]
    pub outer_lr: Option<f64>,
    /// Decoupled weight decay of the outer optimizer [default: 0.001]
    #[arg(long, value_name = "R")]
    pub weight_decay: Option<f64>,
    /// Meta-trained blocks: none, v, p or both [default: both]
    #[arg(long, value_name = "MODE")]
    pub ablation: Option<String>,
    /// Validate every N meta-batches [default: 10]
    #[arg(long, value_name = "N")]
    pub eval_every: Option<usize>,
    /// Validation episodes [default: 200]
    #[arg(long, value_name = "N")]
    pub val_episodes: Option<usize>,
    /// Blocks adapted when scoring validation episodes [default: pb]
    #[arg(long, value_name = "SET")]
    pub eval_adapt_set: Option<String>,
    /// Run seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Checkpoint path for the best validation model
    #[arg(long, value_name = "CKPT")]
    pub out: Option<PathBuf>,
    /// Training report path [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalIrrfArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Ranking method: hc, lr, proto or rocchio [default: hc]
    #[arg(long, value_name = "METHOD")]
    pub method: Option<String>,
    /// Feedback iterations [default: 3]
    #[arg(long, value_name = "N")]
    pub iterations: Option<usize>,
    /// Feedback items per iteration [default: 10]
    #[arg(long, value_name = "N")]
    pub budget: Option<usize>,
    /// Share of the budget requested as relevant [default: 0.8]
    #[arg(long, value_name = "R")]
    pub pos_ratio: Option<f64>,
    /// Candidate-set size (top unlabeled items) [default: 100]
    #[arg(long, value_name = "K")]
    pub pool: Option<usize>,
    /// Seeds [default: 5]
    #[arg(long, value_name = "N")]
    pub seeds: Option<usize>,
    /// Query items per class and seed [default: 5]
    #[arg(long, value_name = "N")]
    pub queries_per_class: Option<usize>,
    /// Restrict to these test classes [default: all]
    #[arg(long, value_name = "C1,C2,..")]
    pub classes: Option<String>,
    /// Exclude labeled items when computing metrics [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub residual_eval: Option<bool>,
    /// Precision cutoff [default: 50]
    #[arg(long, value_name = "K")]
    pub precision_k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub adapt: AdaptArgs,
    /// Run seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Report path [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalFsoccArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Scoring method: hc or proto [default: hc]
    #[arg(long, value_name = "METHOD")]
    pub method: Option<String>,
    /// Support shots K [default: 5]
    #[arg(long, value_name = "K")]
    pub shots: Option<usize>,
    /// Test episodes [default: 10000]
    #[arg(long, value_name = "N")]
    pub episodes: Option<usize>,
    /// Validation episodes for threshold calibration [default: 500]
    #[arg(long, value_name = "N")]
    pub calibration_episodes: Option<usize>,
    /// Also adapt on the unlabeled query features [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub transductive: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub adapt: AdaptArgs,
    /// Run seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Report path [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EvalFsorArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Scoring method: hc or proto [default: hc]
    #[arg(long, value_name = "METHOD")]
    pub method: Option<String>,
    /// Known classes N [default: 5]
    #[arg(long, value_name = "N")]
    pub ways: Option<usize>,
    /// Support shots K per known class [default: 1]
    #[arg(long, value_name = "K")]
    pub shots: Option<usize>,
    /// Test episodes [default: 600]
    #[arg(long, value_name = "N")]
    pub episodes: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub adapt: AdaptArgs,
    /// Run seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Report path [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TheoryCheckArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Feature dimension [default: 16]
    #[arg(long, value_name = "D")]
    pub dim: Option<usize>,
    /// Random trials per check [default: 200]
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Support size of the k-step span fit [default: 4]
    #[arg(long, value_name = "N")]
    pub support: Option<usize>,
    /// Seed [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// JSON report path (the table is always printed)
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ServeArgs {
    /// JSON run-config file; flags override its values
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Default ranking method for new sessions [default: hc]
    #[arg(long, value_name = "METHOD")]
    pub method: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub adapt: AdaptArgs,
    /// Rows ranked by default: all, train, val or test [default: all]
    #[arg(long, value_name = "SCOPE")]
    pub scope: Option<String>,
    /// Bind address [default: 127.0.0.1]
    #[arg(long, value_name = "ADDR")]
    pub host: Option<String>,
    /// Port; 0 picks a free one [default: 8080]
    #[arg(long, value_name = "N")]
    pub port: Option<u16>,
    /// Base URL for item display paths
    #[arg(long, value_name = "URL")]
    pub assets_base: Option<String>,
    /// Write all sessions to this file on shutdown
    #[arg(long, value_name = "FILE")]
    pub snapshot: Option<PathBuf>,
    /// Seed for --random-init [default: 0]
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
}
