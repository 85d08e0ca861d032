//! Simulated relevance-feedback retrieval.
//!
//! A run starts from one query item, ranks the test split by cosine
//! similarity, then repeatedly: takes the top `pool_k` unlabeled items as the
//! candidate set, samples feedback from it using ground-truth labels, refits
//! the method on everything labeled so far and re-ranks.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::mean_std;
use crate::baselines::{LrConfig, RocchioWeights};
use crate::episode::{derive_seed, rng_for};
use crate::error::{Error, Result};
use crate::feature_store::{FeatureCorpus, Split};
use crate::hyperclass::{AdaptConfig, HyperClassParams};
use crate::session::{Method, Query, RetrievalSession, SessionConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrrfConfig {
    pub iterations: usize,
    pub budget: usize,
    pub pos_ratio: f64,
    pub pool_k: usize,
    pub seeds: usize,
    pub queries_per_class: usize,
    pub method: Method,
    /// Restrict evaluation to these test classes (all test classes if unset).
    pub classes: Option<Vec<u32>>,
    pub residual_eval: bool,
    pub precision_k: usize,
    pub adapt: AdaptConfig,
    pub lr: LrConfig,
    pub rocchio: RocchioWeights,
    pub seed: u64,
}

impl Default for IrrfConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            budget: 10,
            pos_ratio: 0.8,
            pool_k: 100,
            seeds: 5,
            queries_per_class: 5,
            method: Method::Hc,
            classes: None,
            residual_eval: false,
            precision_k: 50,
            adapt: AdaptConfig::default(),
            lr: LrConfig::default(),
            rocchio: RocchioWeights::default(),
            seed: 0,
        }
    }
}

impl IrrfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.budget < 1 {
            return bad("budget must be at least 1");
        }
        if self.pool_k < self.budget {
            return bad("pool_k must be at least the budget");
        }
        if !(0.0..=1.0).contains(&self.pos_ratio) {
            return bad("pos_ratio must lie in [0, 1]");
        }
        if self.seeds < 1 || self.queries_per_class < 1 {
            return bad("seeds and queries_per_class must be at least 1");
        }
        self.adapt.validate()
    }

    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            method: self.method,
            adapt: self.adapt.clone(),
            lr: self.lr.clone(),
            rocchio: self.rocchio,
            precision_k: self.precision_k,
            residual_eval: self.residual_eval,
            ..SessionConfig::default()
        }
    }
}

/// Sample simulated feedback from `candidates` (item, relevant) pairs:
/// `round(budget·pos_ratio)` relevant and the rest non-relevant, uniformly
/// without replacement within each group. A short group is topped up from the
/// other, so `min(budget, candidates)` items are returned (relevant first).
pub fn simulate_feedback<R: Rng + ?Sized>(
    candidates: &[(usize, bool)],
    budget: usize,
    pos_ratio: f64,
    rng: &mut R,
) -> Vec<(usize, bool)> {
    let pos: Vec<usize> = candidates.iter().filter(|c| c.1).map(|c| c.0).collect();
    let neg: Vec<usize> = candidates.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let want_pos = ((budget as f64) * pos_ratio).round() as usize;
    let want_pos = want_pos.min(budget);
    let mut n_pos = want_pos.min(pos.len());
    let mut n_neg = (budget - want_pos).min(neg.len());
    if n_pos < want_pos {
        n_neg = (budget - n_pos).min(neg.len());
    }
    if n_neg < budget - want_pos {
        n_pos = (budget - n_neg).min(pos.len());
    }
    pos.choose_multiple(rng, n_pos)
        .map(|&i| (i, true))
        .chain(neg.choose_multiple(rng, n_neg).map(|&i| (i, false)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Labeled items including the query.
    pub shots: usize,
    pub average_precision: f64,
    pub precision_at_k: f64,
    pub feedback: Vec<(usize, bool)>,
}

/// One query's run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrfTrace {
    pub class_id: u32,
    pub query_index: usize,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    /// Full ranking after each iteration (corpus indices).
    #[serde(skip)]
    pub rankings: Vec<Vec<usize>>,
}

/// Run the feedback loop for one query item. `params` is required for `hc`.
pub fn run_irrf(
    corpus: &FeatureCorpus,
    params: Option<&HyperClassParams>,
    cfg: &IrrfConfig,
    query_index: usize,
    seed: u64,
) -> Result<IrrfTrace> {
    cfg.validate()?;
    if query_index >= corpus.len() || corpus.split(query_index) != Split::Test {
        return Err(Error::UnknownItem(format!(
            "query {query_index} is not a test-split item"
        )));
    }
    let class_id = corpus.class_label(query_index);
    let scope = corpus.split_indices(Split::Test);
    let mut session = RetrievalSession::new(corpus, scope, Query::Item(query_index), cfg.session_config(), None)?;
    let mut rng = rng_for(seed, query_index as u64);
    let record = |s: &RetrievalSession, feedback| {
        let snap = s.latest();
        IterationRecord {
            iteration: snap.iteration,
            shots: snap.labeled,
            average_precision: snap.average_precision.unwrap_or(f64::NAN),
            precision_at_k: snap.precision_at_k.unwrap_or(f64::NAN),
            feedback,
        }
    };
    let mut iterations = vec![record(&session, Vec::new())];
    let mut rankings = vec![session.ranking().to_vec()];
    for _ in 0..cfg.iterations {
        let cands: Vec<(usize, bool)> = session
            .candidates(cfg.pool_k)
            .into_iter()
            .map(|i| (i, corpus.class_label(i) == class_id))
            .collect();
        let feedback = simulate_feedback(&cands, cfg.budget, cfg.pos_ratio, &mut rng);
        session.submit_feedback(corpus, &feedback)?;
        session.refine(corpus, params)?;
        iterations.push(record(&session, feedback));
        rankings.push(session.ranking().to_vec());
    }
    Ok(IrrfTrace {
        class_id,
        query_index,
        seed,
        iterations,
        rankings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub shots: usize,
    pub map_mean: f64,
    /// Spread of the per-seed means.
    pub map_std: f64,
    pub map_ci95: f64,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub precision_ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub method: Method,
    pub points: Vec<CurvePoint>,
    /// `per_seed_map[s][i]`: mean AP over all queries of seed `s` at
    /// iteration `i`.
    pub per_seed_map: Vec<Vec<f64>>,
    pub per_seed_precision: Vec<Vec<f64>>,
    pub runs: usize,
}

impl LearningCurve {
    pub fn final_map(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.map_mean)
    }

    pub fn final_map_std(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.map_std)
    }
}

/// Query items for one seed: `queries_per_class` distinct test items per
/// evaluated class.
pub fn pick_queries(corpus: &FeatureCorpus, cfg: &IrrfConfig, seed_index: u64) -> Result<Vec<usize>> {
    let classes = corpus.classes_in(Split::Test);
    let wanted: Vec<u32> = match &cfg.classes {
        Some(c) => c.clone(),
        None => classes.keys().copied().collect(),
    };
    let base = derive_seed(cfg.seed, seed_index);
    let mut out = Vec::new();
    for c in wanted {
        let rows = classes
            .get(&c)
            .ok_or_else(|| Error::InvalidConfig(format!("class {c} is not in the test split")))?;
        if rows.len() < cfg.queries_per_class {
            return Err(Error::Infeasible(format!(
                "class {c} has {} test items, {} queries requested",
                rows.len(),
                cfg.queries_per_class
            )));
        }
        let mut rng = rng_for(base, u64::from(c));
        out.extend(rows.choose_multiple(&mut rng, cfg.queries_per_class).copied());
    }
    Ok(out)
}

/// All runs of an evaluation, seed-major then in query order.
pub fn irrf_traces(corpus: &FeatureCorpus, params: Option<&HyperClassParams>, cfg: &IrrfConfig) -> Result<Vec<Vec<IrrfTrace>>> {
    cfg.validate()?;
    (0..cfg.seeds as u64)
        .map(|s| {
            let queries = pick_queries(corpus, cfg, s)?;
            let run_seed = derive_seed(cfg.seed ^ 0xfeed, s);
            queries
                .par_iter()
                .map(|&q| run_irrf(corpus, params, cfg, q, run_seed))
                .collect()
        })
        .collect()
}

/// Evaluate a method over seeds × classes × queries and aggregate.
pub fn evaluate_irrf(corpus: &FeatureCorpus, params: Option<&HyperClassParams>, cfg: &IrrfConfig) -> Result<LearningCurve> {
    let traces = irrf_traces(corpus, params, cfg)?;
    Ok(aggregate(cfg, &traces))
}

pub fn aggregate(cfg: &IrrfConfig, traces: &[Vec<IrrfTrace>]) -> LearningCurve {
    let n_it = cfg.iterations + 1;
    let seed_means = |f: &dyn Fn(&IterationRecord) -> f64| -> Vec<Vec<f64>> {
        traces
            .iter()
            .map(|runs| {
                (0..n_it)
                    .map(|i| runs.iter().map(|r| f(&r.iterations[i])).sum::<f64>() / runs.len() as f64)
                    .collect()
            })
            .collect()
    };
    let per_seed_map = seed_means(&|r| r.average_precision);
    let per_seed_precision = seed_means(&|r| r.precision_at_k);
    let ci = |std: f64| 1.96 * std / (traces.len() as f64).sqrt();
    let points = (0..n_it)
        .map(|i| {
            let (mm, ms) = mean_std(&per_seed_map.iter().map(|s| s[i]).collect::<Vec<_>>());
            let (pm, ps) = mean_std(&per_seed_precision.iter().map(|s| s[i]).collect::<Vec<_>>());
            CurvePoint {
                iteration: i,
                shots: 1 + cfg.budget * i,
                map_mean: mm,
                map_std: ms,
                map_ci95: ci(ms),
                precision_mean: pm,
                precision_std: ps,
                precision_ci95: ci(ps),
            }
        })
        .collect();
    LearningCurve {
        method: cfg.method,
        points,
        per_seed_map,
        per_seed_precision,
        runs: traces.iter().map(Vec::len).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cands(pos: usize, neg: usize) -> Vec<(usize, bool)> {
        (0..pos).map(|i| (i, true)).chain((pos..pos + neg).map(|i| (i, false))).collect()
    }

    fn counts(sel: &[(usize, bool)]) -> (usize, usize) {
        let p = sel.iter().filter(|s| s.1).count();
        (p, sel.len() - p)
    }

    #[test]
    fn feedback_split_and_shortage_fill() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(counts(&simulate_feedback(&cands(50, 50), 10, 0.8, &mut rng)), (8, 2));
        assert_eq!(counts(&simulate_feedback(&cands(50, 50), 10, 0.5, &mut rng)), (5, 5));
        assert_eq!(counts(&simulate_feedback(&cands(3, 97), 10, 0.8, &mut rng)), (3, 7));
        assert_eq!(counts(&simulate_feedback(&cands(90, 1), 10, 0.8, &mut rng)), (9, 1));
        assert_eq!(counts(&simulate_feedback(&cands(2, 2), 10, 0.8, &mut rng)), (2, 2));
        let sel = simulate_feedback(&cands(30, 30), 10, 0.8, &mut rng);
        let mut ids: Vec<usize> = sel.iter().map(|s| s.0).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn config_validation() {
        let bad = IrrfConfig {
            pool_k: 5,
            ..IrrfConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = IrrfConfig {
            budget: 0,
            ..IrrfConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
