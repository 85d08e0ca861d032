use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hyperclass::episode::TaskConfig;
use hyperclass::eval::fsocc::{run_fsocc, FsoccConfig, OneClassMethod};
use hyperclass::eval::fsor::{run_fsor, FsorConfig};
use hyperclass::eval::irrf::{evaluate_irrf, IrrfConfig};
use hyperclass::feature_store::{gen_synthetic, FeatureCorpus, SyntheticConfig};
use hyperclass::hyperclass::{AdaptConfig, Checkpoint, HyperClassParams, ParamSet};
use hyperclass::meta::{initial_params, meta_train, Ablation, MetaTrainConfig};
use hyperclass::session::Method;
use hyperclass::theory;
use hyperclass_service::api::Scope;
use hyperclass_service::{AppState, ServiceConfig};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::parse_list;

/// A missing or contradictory argument (exit status 2, like flag errors).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| usage(format!("missing required argument --{flag}")))
}

/// A finished command: its report and where to write it.
pub struct Outcome {
    pub report: Value,
    pub path: Option<PathBuf>,
}

fn report(command: &str, resolved: &impl serde::Serialize, seed: Option<u64>, result: Value, started: Instant) -> Result<Value> {
    Ok(json!({
        "command": command,
        "config": serde_json::to_value(resolved)?,
        "seed": seed,
        "result": result,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    }))
}

struct Loaded {
    corpus: FeatureCorpus,
    centered: bool,
}

fn load_corpus(c: &CorpusArgs) -> Result<Loaded> {
    let path = require(&c.features, "features")?;
    let normalize = !c.no_normalize.unwrap_or(false);
    let corpus = FeatureCorpus::load(&path, normalize)
        .with_context(|| format!("loading corpus {}", path.display()))?;
    let centered = !c.no_center.unwrap_or(false);
    let corpus = if centered {
        corpus.centered_on_train().context("centering the corpus")?
    } else {
        corpus
    };
    Ok(Loaded { corpus, centered })
}

fn corpus_summary(l: &Loaded) -> Value {
    json!({
        "dim": l.corpus.dim(),
        "count": l.corpus.len(),
        "normalized": l.corpus.is_normalized(),
        "centered": l.centered,
    })
}

fn adapt_config(base: AdaptConfig, a: &AdaptArgs) -> Result<AdaptConfig> {
    let mut cfg = base;
    if let Some(k) = a.inner_steps {
        cfg.steps = k;
    }
    if let Some(r) = a.inner_lr {
        cfg.inner_lr = r;
    }
    if let Some(r) = a.l2 {
        cfg.l2_weight = r;
    }
    if let Some(s) = &a.adapt_set {
        cfg.adapt_set = ParamSet::parse(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parameters for the hc method: a checkpoint or the seeded initialization.
fn load_model(m: &ModelArgs, needed: bool, loaded: &Loaded, seed: u64) -> Result<(Option<HyperClassParams>, Value)> {
    if m.random_init.unwrap_or(false) {
        if m.ckpt.is_some() {
            return Err(usage("--ckpt and --random-init are mutually exclusive"));
        }
        return Ok((Some(initial_params(loaded.corpus.dim(), seed)), json!({"source": "random-init", "seed": seed})));
    }
    let Some(path) = &m.ckpt else {
        if needed {
            return Err(usage("the hc method needs --ckpt (or --random-init)"));
        }
        return Ok((None, Value::Null));
    };
    let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if ck.params.dim != loaded.corpus.dim() {
        bail!(
            "checkpoint dimension {} does not match corpus dimension {}",
            ck.params.dim,
            loaded.corpus.dim()
        );
    }
    if let Some(c) = ck.config.get("centered").and_then(Value::as_bool) {
        if c != loaded.centered {
            eprintln!(
                "warning: checkpoint was trained with centered={c} but the corpus is loaded with centered={}",
                loaded.centered
            );
        }
    }
    let info = json!({
        "source": path,
        "ablation": ck.ablation,
        "best_validation_score": ck.best_validation_score,
        "meta_batch_index": ck.meta_batch_index,
    });
    Ok((Some(ck.params), info))
}

pub fn gen_synth(a: &GenSynthArgs) -> Result<Outcome> {
    let started = Instant::now();
    let out = require(&a.out, "out")?;
    let d = SyntheticConfig::default();
    let splits = match &a.splits {
        Some(s) => {
            let v = parse_list::<f64>(s)?;
            let [tr, va, te] = v[..] else {
                return Err(usage("--splits takes three fractions"));
            };
            [tr, va, te]
        }
        None => d.split_fractions,
    };
    let cfg = SyntheticConfig {
        num_classes: a.classes.unwrap_or(d.num_classes),
        per_class: a.per_class.unwrap_or(d.per_class),
        dim: a.dim.unwrap_or(d.dim),
        noise_sigma: a.noise.unwrap_or(d.noise_sigma),
        mean_scale: a.mean_scale.unwrap_or(d.mean_scale),
        seed: a.seed.unwrap_or(d.seed),
        split_fractions: splits,
        normalize: !a.no_normalize.unwrap_or(false),
    };
    let corpus = gen_synthetic(&cfg)?;
    corpus.save(&out).with_context(|| format!("writing corpus to {}", out.display()))?;
    let result = json!({
        "out": out,
        "synthetic": cfg,
        "count": corpus.len(),
        "dim": corpus.dim(),
    });
    Ok(Outcome {
        report: report("gen-synth", a, Some(cfg.seed), result, started)?,
        path: None,
    })
}

pub fn meta_train_cmd(a: &MetaTrainArgs) -> Result<Outcome> {
    let started = Instant::now();
    let out = require(&a.out, "out")?;
    let loaded = load_corpus(&a.corpus)?;
    let task = match a.task.as_deref().unwrap_or("irrf") {
        "irrf" => {
            if a.shots.is_some() {
                return Err(usage("--shots applies to fsocc tasks (irrf draws K from 1..=10)"));
            }
            TaskConfig::irrf()
        }
        "fsocc" => TaskConfig::fsocc(a.shots.unwrap_or(5)),
        other => return Err(usage(format!("unknown task {other:?} (irrf or fsocc)"))),
    };
    let d = MetaTrainConfig::default();
    let seed = a.seed.unwrap_or(d.seed);
    let schedule = AdaptArgs {
        inner_steps: a.inner_steps,
        inner_lr: a.inner_lr,
        l2: a.l2,
        adapt_set: None,
    };
    let eval_schedule = AdaptArgs {
        adapt_set: a.eval_adapt_set.clone(),
        ..schedule.clone()
    };
    let ablation: Ablation = a.ablation.as_deref().unwrap_or("both").parse()?;
    let cfg = MetaTrainConfig {
        meta_batches: a.meta_batches.unwrap_or(d.meta_batches),
        tasks_per_batch: a.tasks_per_batch.unwrap_or(d.tasks_per_batch),
        inner: adapt_config(AdaptConfig::meta_train(), &schedule)?,
        outer_lr: a.outer_lr.unwrap_or(d.outer_lr),
        outer_weight_decay: a.weight_decay.unwrap_or(d.outer_weight_decay),
        ablation,
        task,
        selection_metric: None,
        eval_every: a.eval_every.unwrap_or(d.eval_every),
        val_episodes: a.val_episodes.unwrap_or(d.val_episodes),
        eval_adapt: adapt_config(AdaptConfig::default(), &eval_schedule)?,
        seed,
    };
    let outcome = meta_train(&loaded.corpus, &cfg)?;
    let mut best = outcome.best.clone();
    best.config = json!({
        "meta_train": best.config,
        "cli": serde_json::to_value(a)?,
        "centered": loaded.centered,
    });
    best.save(&out).with_context(|| format!("writing checkpoint {}", out.display()))?;
    let result = json!({
        "checkpoint": out,
        "corpus": corpus_summary(&loaded),
        "meta_train": cfg,
        "selection_metric": cfg.metric(),
        "init_validation": outcome.init_validation,
        "best_validation_score": best.best_validation_score,
        "best_meta_batch": best.meta_batch_index,
        "history": outcome.history,
    });
    Ok(Outcome {
        report: report("meta-train", a, Some(seed), result, started)?,
        path: a.report.clone(),
    })
}

pub fn eval_irrf_cmd(a: &EvalIrrfArgs) -> Result<Outcome> {
    let started = Instant::now();
    let loaded = load_corpus(&a.corpus)?;
    let d = IrrfConfig::default();
    let method: Method = a.method.as_deref().unwrap_or("hc").parse()?;
    let seed = a.seed.unwrap_or(d.seed);
    let (params, model) = load_model(&a.model, method == Method::Hc, &loaded, seed)?;
    let classes = a.classes.as_deref().map(parse_list::<u32>).transpose()?;
    let cfg = IrrfConfig {
        iterations: a.iterations.unwrap_or(d.iterations),
        budget: a.budget.unwrap_or(d.budget),
        pos_ratio: a.pos_ratio.unwrap_or(d.pos_ratio),
        pool_k: a.pool.unwrap_or(d.pool_k),
        seeds: a.seeds.unwrap_or(d.seeds),
        queries_per_class: a.queries_per_class.unwrap_or(d.queries_per_class),
        method,
        classes,
        residual_eval: a.residual_eval.unwrap_or(d.residual_eval),
        precision_k: a.precision_k.unwrap_or(d.precision_k),
        adapt: adapt_config(AdaptConfig::default(), &a.adapt)?,
        seed,
        ..d
    };
    let curve = evaluate_irrf(&loaded.corpus, params.as_ref(), &cfg)?;
    let result = json!({
        "corpus": corpus_summary(&loaded),
        "model": model,
        "irrf": cfg,
        "curve": curve,
    });
    Ok(Outcome {
        report: report("eval-irrf", a, Some(seed), result, started)?,
        path: a.report.clone(),
    })
}

fn one_class_method(s: Option<&str>) -> Result<OneClassMethod> {
    Ok(s.unwrap_or("hc").parse()?)
}

pub fn eval_fsocc_cmd(a: &EvalFsoccArgs) -> Result<Outcome> {
    let started = Instant::now();
    let loaded = load_corpus(&a.corpus)?;
    let d = FsoccConfig::default();
    let method = one_class_method(a.method.as_deref())?;
    let seed = a.seed.unwrap_or(d.seed);
    let (params, model) = load_model(&a.model, method == OneClassMethod::Hc, &loaded, seed)?;
    let cfg = FsoccConfig {
        shots: a.shots.unwrap_or(d.shots),
        episodes: a.episodes.unwrap_or(d.episodes),
        calibration_episodes: a.calibration_episodes.unwrap_or(d.calibration_episodes),
        transductive: a.transductive.unwrap_or(d.transductive),
        method,
        adapt: adapt_config(AdaptConfig::default(), &a.adapt)?,
        seed,
    };
    let r = run_fsocc(&loaded.corpus, params.as_ref(), &cfg)?;
    let result = json!({
        "corpus": corpus_summary(&loaded),
        "model": model,
        "fsocc": cfg,
        "auroc": r.auroc,
        "f1": r.f1,
        "acc": r.acc,
    });
    Ok(Outcome {
        report: report("eval-fsocc", a, Some(seed), result, started)?,
        path: a.report.clone(),
    })
}

pub fn eval_fsor_cmd(a: &EvalFsorArgs) -> Result<Outcome> {
    let started = Instant::now();
    let loaded = load_corpus(&a.corpus)?;
    let d = FsorConfig::default();
    let method = one_class_method(a.method.as_deref())?;
    let seed = a.seed.unwrap_or(d.seed);
    let (params, model) = load_model(&a.model, method == OneClassMethod::Hc, &loaded, seed)?;
    let cfg = FsorConfig {
        ways: a.ways.unwrap_or(d.ways),
        shots: a.shots.unwrap_or(d.shots),
        episodes: a.episodes.unwrap_or(d.episodes),
        method,
        adapt: adapt_config(AdaptConfig::default(), &a.adapt)?,
        seed,
    };
    let r = run_fsor(&loaded.corpus, params.as_ref(), &cfg)?;
    let result = json!({
        "corpus": corpus_summary(&loaded),
        "model": model,
        "fsor": cfg,
        "auroc": r,
    });
    Ok(Outcome {
        report: report("eval-fsor", a, Some(seed), result, started)?,
        path: a.report.clone(),
    })
}

fn table_row(check: &theory::CheckResult, group: &str) -> String {
    format!(
        "{:<14} {:<28} {:>11.3e} {:>11.3e} {:>9.1e} {:>6} {}",
        group,
        check.name,
        check.residual,
        check.median_residual,
        check.tolerance,
        check.trials,
        if check.pass { "ok" } else { "FAIL" }
    )
}

/// Returns the report and whether every check passed.
pub fn theory_check_cmd(a: &TheoryCheckArgs) -> Result<(Outcome, bool)> {
    let started = Instant::now();
    let dim = a.dim.unwrap_or(16);
    let trials = a.trials.unwrap_or(200);
    let seed = a.seed.unwrap_or(0);
    let support = a.support.unwrap_or(4);
    if support >= dim {
        return Err(usage(format!("--support ({support}) must be smaller than --dim ({dim})")));
    }
    let lr = theory::check_lr_update(dim, trials, seed)?;
    let hc = theory::check_hc_first_step(dim, trials, seed)?;
    let grads = if dim <= 16 {
        Some(theory::gradcheck_all(dim, trials, seed)?)
    } else {
        None
    };
    let ksteps = (1..=5)
        .map(|k| theory::check_kstep_span(dim, support, k, trials, seed))
        .collect::<hyperclass::Result<Vec<_>>>()?;

    println!(
        "{:<14} {:<28} {:>11} {:>11} {:>9} {:>6} result",
        "group", "check", "max", "median", "tol", "trials"
    );
    let mut pass = true;
    for r in [Some(&lr), Some(&hc), grads.as_ref()].into_iter().flatten() {
        for c in &r.checks {
            println!("{}", table_row(c, &r.name));
            pass &= c.pass;
        }
    }
    for r in &ksteps {
        println!("{}", table_row(&r.fit, &format!("kstep k={}", r.k)));
        pass &= r.fit.pass;
    }
    println!("\nk-step fits without the second-moment families (informational):");
    for r in &ksteps {
        println!(
            "  k={}  reduced residual exceeds full by more than round-off in {}/{} trials",
            r.k,
            r.reduced_strictly_larger,
            r.trials.len()
        );
    }
    if grads.is_none() {
        println!("\ngradient checks skipped: finite differences are limited to dim <= 16");
    }
    let kstep_summary: Vec<Value> = ksteps
        .iter()
        .map(|r| {
            json!({
                "k": r.k,
                "fit": r.fit,
                "reduced_strictly_larger": r.reduced_strictly_larger,
                "trials": r.trials.len(),
                "max_condition_number": r.trials.iter().map(|t| t.condition_number).fold(0.0, f64::max),
            })
        })
        .collect();
    let result = json!({
        "pass": pass,
        "lr_update": lr,
        "hc_first_step": hc,
        "gradcheck": grads,
        "kstep_span": kstep_summary,
    });
    Ok((
        Outcome {
            report: report("theory-check", a, Some(seed), result, started)?,
            path: a.report.clone(),
        },
        pass,
    ))
}

pub fn serve_cmd(a: &ServeArgs) -> Result<()> {
    let loaded = load_corpus(&a.corpus)?;
    let method: Method = a.method.as_deref().unwrap_or("hc").parse()?;
    let seed = a.seed.unwrap_or(0);
    let (params, _) = load_model(&a.model, method == Method::Hc, &loaded, seed)?;
    let scope: Scope = a
        .scope
        .as_deref()
        .unwrap_or("all")
        .parse()
        .map_err(usage)?;
    let mut cfg = ServiceConfig {
        scope,
        assets_base: a.assets_base.clone(),
        ..ServiceConfig::default()
    };
    cfg.session.method = method;
    cfg.session.adapt = adapt_config(AdaptConfig::default(), &a.adapt)?;
    let state = AppState::new(loaded.corpus, params, cfg)?;
    let host = a.host.clone().unwrap_or_else(|| "127.0.0.1".into());
    let port = a.port.unwrap_or(8080);
    let snapshot = a.snapshot.clone();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host.as_str(), port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        hyperclass_service::serve(listener, state.clone(), shutdown).await?;
        if let Some(path) = snapshot {
            write_snapshot(&state, &path)?;
        }
        Ok(())
    })
}

fn write_snapshot(state: &AppState, path: &Path) -> Result<()> {
    state
        .write_snapshot(path)
        .with_context(|| format!("writing session snapshot {}", path.display()))?;
    eprintln!("wrote {} session(s) to {}", state.session_count(), path.display());
    Ok(())
}
