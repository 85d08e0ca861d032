//! Episode sampling for the three task families.
//!
//! * `irrf`: binary, imbalanced, open-set. `K` positives plus
//!   `round(K·ratio)` negatives from at least `min_negative_classes` classes;
//!   the query mixes positives with negatives from any other class, at least
//!   one of which never appears in the support.
//! * `fsocc`: `K` positives only; query of positives and negatives.
//! * `fsor`: `N`-way `K`-shot class-labeled support; query of `query_pos`
//!   samples per known class and `query_neg` samples from each of
//!   `unknown_classes` classes disjoint from the support.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_store::{FeatureCorpus, Split};
use crate::linear::{FeatureSet, LabeledSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    Irrf,
    Fsocc,
    Fsor,
}

impl std::str::FromStr for TaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irrf" => Ok(TaskMode::Irrf),
            "fsocc" => Ok(TaskMode::Fsocc),
            "fsor" => Ok(TaskMode::Fsor),
            other => Err(Error::InvalidConfig(format!("unknown task mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub mode: TaskMode,
    /// Shots `K` (the lower bound when `shots_max` is set).
    pub shots: usize,
    /// When set, `K` is drawn uniformly from `shots..=shots_max` per episode.
    #[serde(default)]
    pub shots_max: Option<usize>,
    /// Known classes `N` (fsor only).
    #[serde(default = "default_ways")]
    pub ways: usize,
    pub support_neg_per_pos: f64,
    pub min_negative_classes: usize,
    /// irrf/fsocc: query positives; fsor: query samples per known class.
    pub query_pos: usize,
    /// irrf/fsocc: query negatives; fsor: query samples per unknown class.
    pub query_neg: usize,
    /// Unknown classes in an fsor query.
    #[serde(default = "default_unknown")]
    pub unknown_classes: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_ways() -> usize {
    5
}

fn default_unknown() -> usize {
    5
}

impl TaskConfig {
    /// Meta-training regime for retrieval: `K ~ U{1..10}`, 4 negatives per
    /// positive from ≥ 3 classes, query of 15 positives and 45 negatives.
    pub fn irrf() -> Self {
        Self {
            mode: TaskMode::Irrf,
            shots: 1,
            shots_max: Some(10),
            ways: 1,
            support_neg_per_pos: 4.0,
            min_negative_classes: 3,
            query_pos: 15,
            query_neg: 45,
            unknown_classes: 0,
            seed: 0,
        }
    }

    /// 1-way `K`-shot one-class task with a 15 + 15 query.
    pub fn fsocc(shots: usize) -> Self {
        Self {
            mode: TaskMode::Fsocc,
            shots,
            shots_max: None,
            ways: 1,
            support_neg_per_pos: 0.0,
            min_negative_classes: 2,
            query_pos: 15,
            query_neg: 15,
            unknown_classes: 0,
            seed: 0,
        }
    }

    /// `N`-way `K`-shot open-set task: 15 queries per known class and 15 from
    /// each of 5 unknown classes.
    pub fn fsor(ways: usize, shots: usize) -> Self {
        Self {
            mode: TaskMode::Fsor,
            shots,
            shots_max: None,
            ways,
            support_neg_per_pos: 0.0,
            min_negative_classes: 2,
            query_pos: 15,
            query_neg: 15,
            unknown_classes: 5,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.shots < 1 {
            return bad("shots must be at least 1");
        }
        if let Some(m) = self.shots_max {
            if m < self.shots {
                return bad("shots_max must be at least shots");
            }
        }
        if !(self.support_neg_per_pos >= 0.0) || !self.support_neg_per_pos.is_finite() {
            return bad("support_neg_per_pos must be a finite nonnegative ratio");
        }
        match self.mode {
            TaskMode::Irrf if self.min_negative_classes < 2 => {
                bad("open-set tasks need min_negative_classes >= 2")
            }
            TaskMode::Fsor if self.ways < 1 => bad("fsor needs at least one way"),
            TaskMode::Fsor if self.unknown_classes < 1 => bad("fsor needs unknown classes"),
            _ => Ok(()),
        }
    }
}

/// One sampled task. Labels are binary (1/0) for irrf and fsocc; for fsor
/// they are the true class ids and [`Episode::query_binary`] reports
/// in-set membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub mode: TaskMode,
    pub support_indices: Vec<usize>,
    pub support_features: FeatureSet,
    pub support_labels: Vec<i64>,
    pub query_indices: Vec<usize>,
    pub query_features: FeatureSet,
    pub query_labels: Vec<i64>,
    /// The positive class (irrf/fsocc) or the known classes (fsor).
    pub positive_classes: Vec<u32>,
    /// Classes contributing negatives or unknowns anywhere in the episode.
    pub negative_classes: BTreeSet<u32>,
}

impl Episode {
    pub fn n(&self) -> usize {
        self.support_indices.len()
    }

    pub fn m(&self) -> usize {
        self.query_indices.len()
    }

    /// Support as a binary labeled set (fsor rows are all "positive").
    pub fn support_set(&self) -> LabeledSet {
        let labels = self
            .support_labels
            .iter()
            .map(|&l| self.mode == TaskMode::Fsor || l == 1)
            .collect();
        LabeledSet::from_parts(self.support_features.clone(), labels).expect("consistent episode")
    }

    /// Positive support rows only.
    pub fn support_positives(&self) -> FeatureSet {
        self.support_set().with_label(true)
    }

    /// Query relevance (irrf/fsocc) or in-set membership (fsor).
    pub fn query_binary(&self) -> Vec<bool> {
        match self.mode {
            TaskMode::Fsor => self
                .query_labels
                .iter()
                .map(|&l| l >= 0 && self.positive_classes.contains(&(l as u32)))
                .collect(),
            _ => self.query_labels.iter().map(|&l| l == 1).collect(),
        }
    }

    /// Support rows of one known fsor class.
    pub fn support_of_class(&self, class: u32) -> FeatureSet {
        let mut out = FeatureSet::new(self.support_features.dim());
        for (row, &l) in self.support_features.rows().zip(&self.support_labels) {
            if l == i64::from(class) {
                out.push(row).expect("same dim");
            }
        }
        out
    }
}

/// SplitMix64 finalizer applied to `base ^ index`; gives every task of a
/// run its own reproducible generator seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = (base ^ index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(base: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, index))
}

fn pick<R: Rng + ?Sized>(pool: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    pool.choose_multiple(rng, k).copied().collect()
}

struct Builder<'a> {
    corpus: &'a FeatureCorpus,
    support: Vec<(usize, i64)>,
    query: Vec<(usize, i64)>,
}

impl<'a> Builder<'a> {
    fn finish<R: Rng + ?Sized>(
        mut self,
        mode: TaskMode,
        positive_classes: Vec<u32>,
        negative_classes: BTreeSet<u32>,
        rng: &mut R,
    ) -> Episode {
        // unshuffled queries would place positives first and leak through tie-breaking
        self.query.shuffle(rng);
        let dim = self.corpus.dim();
        let mut support_features = FeatureSet::new(dim);
        let mut query_features = FeatureSet::new(dim);
        for &(i, _) in &self.support {
            support_features.push_f32(self.corpus.row(i));
        }
        for &(i, _) in &self.query {
            query_features.push_f32(self.corpus.row(i));
        }
        Episode {
            mode,
            support_indices: self.support.iter().map(|p| p.0).collect(),
            support_features,
            support_labels: self.support.iter().map(|p| p.1).collect(),
            query_indices: self.query.iter().map(|p| p.0).collect(),
            query_features,
            query_labels: self.query.iter().map(|p| p.1).collect(),
            positive_classes,
            negative_classes,
        }
    }
}

fn infeasible(msg: String) -> Error {
    Error::Infeasible(msg)
}

/// Draw one episode from `split`.
pub fn sample_episode<R: Rng + ?Sized>(
    corpus: &FeatureCorpus,
    split: Split,
    cfg: &TaskConfig,
    rng: &mut R,
) -> Result<Episode> {
    cfg.validate()?;
    let classes = corpus.classes_in(split);
    let shots = match cfg.shots_max {
        Some(m) => rng.random_range(cfg.shots..=m),
        None => cfg.shots,
    };
    match cfg.mode {
        TaskMode::Irrf => sample_irrf(corpus, &classes, cfg, shots, rng),
        TaskMode::Fsocc => sample_fsocc(corpus, &classes, cfg, shots, rng),
        TaskMode::Fsor => sample_fsor(corpus, &classes, cfg, shots, rng),
    }
}

fn eligible(classes: &BTreeMap<u32, Vec<usize>>, need: usize) -> Vec<u32> {
    classes
        .iter()
        .filter(|(_, rows)| rows.len() >= need)
        .map(|(&c, _)| c)
        .collect()
}

fn positive_part<R: Rng + ?Sized>(
    classes: &BTreeMap<u32, Vec<usize>>,
    shots: usize,
    query_pos: usize,
    rng: &mut R,
) -> Result<(u32, Vec<usize>, Vec<usize>)> {
    let candidates = eligible(classes, shots + query_pos);
    let &pos = candidates.choose(rng).ok_or_else(|| {
        infeasible(format!(
            "no class has {} samples for {shots} shots + {query_pos} query positives",
            shots + query_pos
        ))
    })?;
    let drawn = pick(&classes[&pos], shots + query_pos, rng);
    let (s, q) = drawn.split_at(shots);
    Ok((pos, s.to_vec(), q.to_vec()))
}

fn sample_irrf<R: Rng + ?Sized>(
    corpus: &FeatureCorpus,
    classes: &BTreeMap<u32, Vec<usize>>,
    cfg: &TaskConfig,
    shots: usize,
    rng: &mut R,
) -> Result<Episode> {
    let (pos, sup_pos, q_pos) = positive_part(classes, shots, cfg.query_pos, rng)?;
    let others: Vec<u32> = classes.keys().copied().filter(|&c| c != pos).collect();
    let n_neg = (shots as f64 * cfg.support_neg_per_pos).round() as usize;
    // keep at least one negative class out of the support for the query
    let max_classes = others.len().saturating_sub(1).min(n_neg);
    if max_classes < cfg.min_negative_classes {
        return Err(infeasible(format!(
            "{n_neg} support negatives over {} other classes cannot cover {} classes and leave one unseen",
            others.len(),
            cfg.min_negative_classes
        )));
    }
    let n_classes = rng.random_range(cfg.min_negative_classes..=max_classes);
    let sup_classes: BTreeSet<u32> = others.choose_multiple(rng, n_classes).copied().collect();

    let mut sup_neg = Vec::with_capacity(n_neg);
    let mut rest = Vec::new();
    for c in &sup_classes {
        let rows = &classes[c];
        let first = *rows.choose(rng).expect("non-empty class");
        sup_neg.push(first);
        rest.extend(rows.iter().copied().filter(|&i| i != first));
    }
    if rest.len() < n_neg - sup_neg.len() {
        return Err(infeasible("not enough negative samples for the support".into()));
    }
    sup_neg.extend(pick(&rest, n_neg - sup_neg.len(), rng));

    let used: BTreeSet<usize> = sup_neg.iter().copied().collect();
    let unseen: Vec<usize> = others
        .iter()
        .filter(|c| !sup_classes.contains(c))
        .flat_map(|c| classes[c].iter().copied())
        .collect();
    let mut q_neg = Vec::with_capacity(cfg.query_neg);
    if cfg.query_neg > 0 {
        q_neg.push(*unseen.choose(rng).expect("one unseen class reserved"));
        let pool: Vec<usize> = others
            .iter()
            .flat_map(|c| classes[c].iter().copied())
            .filter(|i| !used.contains(i) && *i != q_neg[0])
            .collect();
        if pool.len() < cfg.query_neg - 1 {
            return Err(infeasible("not enough negative samples for the query".into()));
        }
        q_neg.extend(pick(&pool, cfg.query_neg - 1, rng));
    }

    let negative_classes = sup_neg
        .iter()
        .chain(&q_neg)
        .map(|&i| corpus.class_label(i))
        .collect();
    let b = Builder {
        corpus,
        support: sup_pos
            .iter()
            .map(|&i| (i, 1))
            .chain(sup_neg.iter().map(|&i| (i, 0)))
            .collect(),
        query: q_pos
            .iter()
            .map(|&i| (i, 1))
            .chain(q_neg.iter().map(|&i| (i, 0)))
            .collect(),
    };
    Ok(b.finish(TaskMode::Irrf, vec![pos], negative_classes, rng))
}

fn sample_fsocc<R: Rng + ?Sized>(
    corpus: &FeatureCorpus,
    classes: &BTreeMap<u32, Vec<usize>>,
    cfg: &TaskConfig,
    shots: usize,
    rng: &mut R,
) -> Result<Episode> {
    if classes.len() < 2 {
        return Err(infeasible("one-class tasks need at least two classes".into()));
    }
    let (pos, sup_pos, q_pos) = positive_part(classes, shots, cfg.query_pos, rng)?;
    let pool: Vec<usize> = classes
        .iter()
        .filter(|(&c, _)| c != pos)
        .flat_map(|(_, rows)| rows.iter().copied())
        .collect();
    if pool.len() < cfg.query_neg {
        return Err(infeasible("not enough negative samples for the query".into()));
    }
    let q_neg = pick(&pool, cfg.query_neg, rng);
    let negative_classes = q_neg.iter().map(|&i| corpus.class_label(i)).collect();
    let b = Builder {
        corpus,
        support: sup_pos.iter().map(|&i| (i, 1)).collect(),
        query: q_pos
            .iter()
            .map(|&i| (i, 1))
            .chain(q_neg.iter().map(|&i| (i, 0)))
            .collect(),
    };
    Ok(b.finish(TaskMode::Fsocc, vec![pos], negative_classes, rng))
}

fn sample_fsor<R: Rng + ?Sized>(
    corpus: &FeatureCorpus,
    classes: &BTreeMap<u32, Vec<usize>>,
    cfg: &TaskConfig,
    shots: usize,
    rng: &mut R,
) -> Result<Episode> {
    let known_pool = eligible(classes, shots + cfg.query_pos);
    if known_pool.len() < cfg.ways {
        return Err(infeasible(format!(
            "{} ways requested but only {} classes have {} samples",
            cfg.ways,
            known_pool.len(),
            shots + cfg.query_pos
        )));
    }
    let known: Vec<u32> = known_pool.choose_multiple(rng, cfg.ways).copied().collect();
    let unknown_pool: Vec<u32> = eligible(classes, cfg.query_neg)
        .into_iter()
        .filter(|c| !known.contains(c))
        .collect();
    if unknown_pool.len() < cfg.unknown_classes {
        return Err(infeasible(format!(
            "{} unknown classes requested but only {} remain",
            cfg.unknown_classes,
            unknown_pool.len()
        )));
    }
    let unknown: Vec<u32> = unknown_pool
        .choose_multiple(rng, cfg.unknown_classes)
        .copied()
        .collect();

    let mut support = Vec::new();
    let mut query = Vec::new();
    for &c in &known {
        let drawn = pick(&classes[&c], shots + cfg.query_pos, rng);
        support.extend(drawn[..shots].iter().map(|&i| (i, i64::from(c))));
        query.extend(drawn[shots..].iter().map(|&i| (i, i64::from(c))));
    }
    for &c in &unknown {
        query.extend(
            pick(&classes[&c], cfg.query_neg, rng)
                .into_iter()
                .map(|i| (i, i64::from(c))),
        );
    }
    let b = Builder {
        corpus,
        support,
        query,
    };
    Ok(b.finish(TaskMode::Fsor, known, unknown.into_iter().collect(), rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::{gen_synthetic, SyntheticConfig};
    use proptest::prelude::*;

    fn corpus() -> FeatureCorpus {
        gen_synthetic(&SyntheticConfig {
            num_classes: 30,
            per_class: 40,
            dim: 8,
            split_fractions: [0.4, 0.2, 0.4],
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn fsocc_composition() {
        let c = corpus();
        let ep = sample_episode(&c, Split::Test, &TaskConfig::fsocc(5), &mut rng_for(1, 0)).unwrap();
        assert_eq!(ep.n(), 5);
        assert!(ep.support_labels.iter().all(|&l| l == 1));
        let q = ep.query_binary();
        assert_eq!(q.iter().filter(|&&b| b).count(), 15);
        assert_eq!(q.iter().filter(|&&b| !b).count(), 15);
    }

    #[test]
    fn fsor_composition() {
        let c = corpus();
        let ep = sample_episode(&c, Split::Test, &TaskConfig::fsor(5, 1), &mut rng_for(2, 0)).unwrap();
        assert_eq!(ep.n(), 5);
        let q = ep.query_binary();
        assert_eq!(q.iter().filter(|&&b| b).count(), 75);
        assert_eq!(q.iter().filter(|&&b| !b).count(), 75);
        let known: BTreeSet<u32> = ep.positive_classes.iter().copied().collect();
        assert!(known.is_disjoint(&ep.negative_classes));
        assert_eq!(ep.negative_classes.len(), 5);
    }

    #[test]
    fn irrf_composition() {
        let c = corpus();
        let cfg = TaskConfig {
            shots: 4,
            shots_max: None,
            ..TaskConfig::irrf()
        };
        let ep = sample_episode(&c, Split::Test, &cfg, &mut rng_for(3, 0)).unwrap();
        let pos = ep.support_labels.iter().filter(|&&l| l == 1).count();
        assert_eq!((pos, ep.n() - pos), (4, 16));
        let sup_neg_classes: BTreeSet<u32> = ep
            .support_indices
            .iter()
            .zip(&ep.support_labels)
            .filter(|(_, &l)| l == 0)
            .map(|(&i, _)| c.class_label(i))
            .collect();
        assert!(sup_neg_classes.len() >= 3);
    }

    #[test]
    fn infeasible_requests_error() {
        let c = corpus();
        let cfg = TaskConfig {
            shots: 39,
            ..TaskConfig::fsocc(39)
        };
        assert!(matches!(
            sample_episode(&c, Split::Test, &cfg, &mut rng_for(0, 0)),
            Err(Error::Infeasible(_))
        ));
        // val split has 6 classes: 5 known leave one unknown
        assert!(sample_episode(&c, Split::Val, &TaskConfig::fsor(5, 1), &mut rng_for(0, 0)).is_err());
        let bad = TaskConfig {
            min_negative_classes: 1,
            ..TaskConfig::irrf()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn episodes_are_reproducible_and_disjoint(seed: u64, mode in 0u8..3) {
            let c = corpus();
            let cfg = match mode {
                0 => TaskConfig::irrf(),
                1 => TaskConfig::fsocc(5),
                _ => TaskConfig::fsor(5, 1),
            };
            let a = sample_episode(&c, Split::Test, &cfg, &mut rng_for(seed, 0)).unwrap();
            let b = sample_episode(&c, Split::Test, &cfg, &mut rng_for(seed, 0)).unwrap();
            prop_assert_eq!(&a, &b);
            let s: BTreeSet<usize> = a.support_indices.iter().copied().collect();
            prop_assert!(a.query_indices.iter().all(|i| !s.contains(i)));
            let all: BTreeSet<usize> = a.support_indices.iter().chain(&a.query_indices).copied().collect();
            prop_assert_eq!(all.len(), a.n() + a.m());
            prop_assert!(a.positive_classes.iter().all(|p| !a.negative_classes.contains(p)));
            if cfg.mode != TaskMode::Fsocc {
                // some query negative comes from a class absent from the support
                let support_classes: BTreeSet<u32> =
                    a.support_indices.iter().map(|&i| c.class_label(i)).collect();
                let open = a.query_indices.iter().zip(a.query_binary())
                    .any(|(&i, pos)| !pos && !support_classes.contains(&c.class_label(i)));
                prop_assert!(open);
            }
        }
    }
}
