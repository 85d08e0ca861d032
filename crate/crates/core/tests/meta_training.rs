//! Outer-loop contracts: freeze semantics, zero learning rate, determinism
//! and the basic learning signal on the synthetic corpus.

use std::sync::OnceLock;

use hyperclass::episode::TaskConfig;
use hyperclass::feature_store::{gen_synthetic, FeatureCorpus, SyntheticConfig};
use hyperclass::hyperclass::{Checkpoint, HyperClassParams};
use hyperclass::meta::{adam_step, meta_train, Ablation, AdamState, MetaTrainConfig};

fn corpus() -> &'static FeatureCorpus {
    static C: OnceLock<FeatureCorpus> = OnceLock::new();
    C.get_or_init(|| {
        gen_synthetic(&SyntheticConfig::default())
            .unwrap()
            .centered_on_train()
            .unwrap()
    })
}

fn bits(p: &HyperClassParams) -> Vec<u64> {
    p.v.iter().chain(&p.p).chain(&p.b).map(|x| x.to_bits()).collect()
}

fn small(batches: usize) -> MetaTrainConfig {
    MetaTrainConfig {
        meta_batches: batches,
        tasks_per_batch: 20,
        eval_every: 5,
        val_episodes: 40,
        ..MetaTrainConfig::default()
    }
}

#[test]
fn zero_outer_lr_keeps_the_initialization() {
    let cfg = MetaTrainConfig {
        outer_lr: 0.0,
        ..small(6)
    };
    let out = meta_train(corpus(), &cfg).unwrap();
    assert_eq!(bits(&out.final_params), bits(&out.init_params));
}

#[test]
fn ablations_freeze_their_blocks() {
    let c = corpus();
    let v_only = meta_train(c, &MetaTrainConfig { ablation: Ablation::VOnly, ..small(4) }).unwrap();
    assert_eq!(v_only.final_params.p, v_only.init_params.p);
    assert_eq!(v_only.final_params.b, v_only.init_params.b);
    assert_ne!(v_only.final_params.v, v_only.init_params.v);

    let p_only = meta_train(c, &MetaTrainConfig { ablation: Ablation::POnly, ..small(4) }).unwrap();
    assert_eq!(p_only.final_params.v, p_only.init_params.v);
    assert_ne!(p_only.final_params.p, p_only.init_params.p);

    let none = meta_train(c, &MetaTrainConfig { ablation: Ablation::None, ..small(4) }).unwrap();
    assert_eq!(bits(&none.best.params), bits(&none.init_params));
    assert!(none.history.is_empty());
}

#[test]
fn training_is_reproducible_across_thread_counts() {
    let cfg = small(5);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| meta_train(corpus(), &cfg)).unwrap();
    let b = meta_train(corpus(), &cfg).unwrap();
    assert_eq!(bits(&a.best.params), bits(&b.best.params));
    assert_eq!(bits(&a.final_params), bits(&b.final_params));
    assert_eq!(a.history, b.history);
}

#[test]
fn best_checkpoint_round_trips_with_its_score() {
    let out = meta_train(corpus(), &small(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.ckpt");
    out.best.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(bits(&back.params), bits(&out.best.params));
    assert_eq!(back.best_validation_score, out.best.best_validation_score);
    assert_eq!(back.meta_batch_index, out.best.meta_batch_index);
}

#[test]
fn fsocc_meta_training_beats_its_initialization() {
    let cfg = MetaTrainConfig {
        meta_batches: 50,
        task: TaskConfig::fsocc(5),
        ..MetaTrainConfig::default()
    };
    let out = meta_train(corpus(), &cfg).unwrap();
    let best = out.best.best_validation_score.unwrap();
    assert!(best > out.init_validation, "best {best} vs init {}", out.init_validation);
}

#[test]
fn query_loss_decreases_over_fifty_batches() {
    let mut first = 0.0;
    let mut last = 0.0;
    for seed in 0..3 {
        let cfg = MetaTrainConfig {
            meta_batches: 50,
            eval_every: 50,
            val_episodes: 20,
            seed,
            ..MetaTrainConfig::default()
        };
        let out = meta_train(corpus(), &cfg).unwrap();
        first += out.history[0].query_loss / 3.0;
        last += out.history[49].query_loss / 3.0;
    }
    assert!(last < first, "loss {first} -> {last}");
}

#[test]
fn adam_contracts() {
    let mut theta = vec![0.3, -1.2, 2.0];
    let mut st = AdamState::new(3);
    adam_step(&mut theta, &[0.0; 3], &mut st, 0.01, 0.0).unwrap();
    assert_eq!(theta, vec![0.3, -1.2, 2.0]);

    let mut theta = vec![0.0; 3];
    let mut st = AdamState::new(3);
    adam_step(&mut theta, &[0.5, -2.0, 1e-3], &mut st, 0.01, 0.0).unwrap();
    for (t, s) in theta.iter().zip([-1.0, 1.0, -1.0]) {
        assert_eq!(t.signum(), s);
        assert!((t.abs() - 0.01).abs() < 1e-6);
    }

    let mut theta = vec![0.3, -1.2, 2.0];
    let before: f64 = theta.iter().map(|x| x * x).sum();
    let mut st = AdamState::new(3);
    adam_step(&mut theta, &[0.0; 3], &mut st, 0.01, 0.1).unwrap();
    assert!(theta.iter().map(|x| x * x).sum::<f64>() < before);
    assert!(adam_step(&mut theta, &[0.0; 2], &mut st, 0.01, 0.1).is_err());
}
