//! Interactive retrieval sessions: rank, collect relevance labels, refit,
//! re-rank. The simulated relevance-feedback benchmark drives the same type,
//! so a scripted label sequence yields identical rankings in both places.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{lr_fit, proto_fit, rocchio_refine, LrConfig, RocchioWeights};
use crate::error::{Error, Result};
use crate::eval::metrics::{average_precision, precision_at_k};
use crate::feature_store::FeatureCorpus;
use crate::hyperclass::{adapt, AdaptConfig, HyperClassParams};
use crate::linear::{FeatureSet, LabeledSet};
use crate::ranking::{cosine_scores, linear_scores, rank_order};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hc,
    Lr,
    Proto,
    Rocchio,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hc, Method::Lr, Method::Proto, Method::Rocchio];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hc => "hc",
            Method::Lr => "lr",
            Method::Proto => "proto",
            Method::Rocchio => "rocchio",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc" => Ok(Method::Hc),
            "lr" => Ok(Method::Lr),
            "proto" => Ok(Method::Proto),
            "rocchio" => Ok(Method::Rocchio),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionConfig {
    pub method: Method,
    pub adapt: AdaptConfig,
    pub lr: LrConfig,
    pub rocchio: RocchioWeights,
    /// Entries kept per history snapshot.
    pub digest_k: usize,
    /// Cutoff for the precision metric attached to snapshots.
    pub precision_k: usize,
    /// Exclude labeled items from the ranking the metrics are computed on.
    pub residual_eval: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            method: Method::Hc,
            adapt: AdaptConfig::default(),
            lr: LrConfig::default(),
            rocchio: RocchioWeights::default(),
            digest_k: 200,
            precision_k: 50,
            residual_eval: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Item(usize),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSnapshot {
    pub iteration: usize,
    pub labeled: usize,
    pub top: Vec<RankedItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision_at_k: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RetrievalSession {
    cfg: SessionConfig,
    scope: Vec<usize>,
    query: Vec<f64>,
    query_item: Option<usize>,
    relevant_class: Option<u32>,
    pool: BTreeMap<usize, bool>,
    iteration: usize,
    /// Scores aligned with `scope`.
    scores: Vec<f64>,
    /// Corpus indices in rank order.
    ranking: Vec<usize>,
    history: Vec<RankingSnapshot>,
}

impl RetrievalSession {
    /// Start a session ranking the corpus rows in `scope` by cosine
    /// similarity to the query. A query item joins the labeled pool as
    /// relevant and, unless overridden, defines the relevant class used for
    /// metrics.
    pub fn new(
        corpus: &FeatureCorpus,
        scope: Vec<usize>,
        query: Query,
        cfg: SessionConfig,
        relevant_class: Option<u32>,
    ) -> Result<Self> {
        if scope.is_empty() {
            return Err(Error::Empty("ranking scope"));
        }
        if let Some(&bad) = scope.iter().find(|&&i| i >= corpus.len()) {
            return Err(Error::UnknownItem(bad.to_string()));
        }
        cfg.adapt.validate()?;
        if cfg.digest_k == 0 || cfg.precision_k == 0 {
            return Err(Error::InvalidConfig("digest_k and precision_k must be positive".into()));
        }
        let (query, query_item) = match query {
            Query::Item(i) => {
                if i >= corpus.len() {
                    return Err(Error::UnknownItem(i.to_string()));
                }
                (corpus.row_f64(i), Some(i))
            }
            Query::Vector(v) => {
                if v.len() != corpus.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: corpus.dim(),
                        actual: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidConfig("query vector must be finite".into()));
                }
                (v, None)
            }
        };
        let relevant_class = relevant_class.or(query_item.map(|i| corpus.class_label(i)));
        let mut pool = BTreeMap::new();
        if let Some(i) = query_item {
            pool.insert(i, true);
        }
        let scores = cosine_scores(corpus, &scope, &query);
        let mut s = Self {
            cfg,
            scope,
            query,
            query_item,
            relevant_class,
            pool,
            iteration: 0,
            scores: Vec::new(),
            ranking: Vec::new(),
            history: Vec::new(),
        };
        s.install(corpus, scores)?;
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn query_item(&self) -> Option<usize> {
        self.query_item
    }

    pub fn relevant_class(&self) -> Option<u32> {
        self.relevant_class
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    /// Labeled items in ascending index order.
    pub fn labeled(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.pool.iter().map(|(&i, &l)| (i, l))
    }

    pub fn labeled_count(&self) -> usize {
        self.pool.len()
    }

    pub fn is_labeled(&self, index: usize) -> bool {
        self.pool.contains_key(&index)
    }

    /// Current ranking (corpus indices, best first).
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// The top `k` of the current ranking with scores.
    pub fn top(&self, k: usize) -> Vec<RankedItem> {
        let pos: BTreeMap<usize, usize> = self.scope.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        self.ranking
            .iter()
            .take(k)
            .map(|&i| RankedItem {
                index: i,
                score: self.scores[pos[&i]],
            })
            .collect()
    }

    /// The first `k` unlabeled items of the current ranking.
    pub fn candidates(&self, k: usize) -> Vec<usize> {
        self.ranking
            .iter()
            .copied()
            .filter(|i| !self.pool.contains_key(i))
            .take(k)
            .collect()
    }

    pub fn history(&self) -> &[RankingSnapshot] {
        &self.history
    }

    pub fn latest(&self) -> &RankingSnapshot {
        self.history.last().expect("a session always has its initial snapshot")
    }

    /// For every item appearing in any snapshot: `(iteration, 1-based rank)`
    /// for each snapshot that contains it.
    pub fn rank_trajectories(&self) -> BTreeMap<usize, Vec<(usize, usize)>> {
        let mut out: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for snap in &self.history {
            for (r, item) in snap.top.iter().enumerate() {
                out.entry(item.index).or_default().push((snap.iteration, r + 1));
            }
        }
        out
    }

    /// Record labels; a repeated item takes its newest label. The batch is
    /// validated as a whole before anything is applied. Returns the pool size.
    pub fn submit_feedback(&mut self, corpus: &FeatureCorpus, labels: &[(usize, bool)]) -> Result<usize> {
        for &(i, rel) in labels {
            if i >= corpus.len() {
                return Err(Error::UnknownItem(i.to_string()));
            }
            if Some(i) == self.query_item && !rel {
                return Err(Error::InvalidConfig(format!(
                    "item {} is the session query and stays relevant",
                    corpus.id(i)
                )));
            }
        }
        for &(i, rel) in labels {
            self.pool.insert(i, rel);
        }
        Ok(self.pool.len())
    }

    /// Training set: the query vector (when it is not a corpus item) followed
    /// by the labeled pool in index order.
    fn training_set(&self, corpus: &FeatureCorpus) -> Result<LabeledSet> {
        let mut set = LabeledSet::new(corpus.dim());
        if self.query_item.is_none() {
            set.push(&self.query, true)?;
        }
        for (&i, &rel) in &self.pool {
            set.push(&corpus.row_f64(i), rel)?;
        }
        Ok(set)
    }

    /// Fit the session's method on everything labeled so far and re-rank.
    /// `params` is the meta-learned initialization, required for `hc`.
    pub fn refine(&mut self, corpus: &FeatureCorpus, params: Option<&HyperClassParams>) -> Result<&RankingSnapshot> {
        let support = self.training_set(corpus)?;
        if !support.labels().iter().any(|&l| l) {
            return Err(Error::Empty("relevant feedback"));
        }
        let scores = match self.cfg.method {
            Method::Hc => {
                let init = params.ok_or_else(|| {
                    Error::InvalidConfig("the hc method needs a checkpoint".into())
                })?;
                if init.dim != corpus.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: corpus.dim(),
                        actual: init.dim,
                    });
                }
                let clf = adapt(init, &support, &self.cfg.adapt)?.compose();
                linear_scores(corpus, &self.scope, &clf)
            }
            Method::Lr => linear_scores(corpus, &self.scope, &lr_fit(&support, &self.cfg.lr)?),
            Method::Proto => {
                let proto = proto_fit(&support.with_label(true))?;
                cosine_scores(corpus, &self.scope, &proto.weights)
            }
            Method::Rocchio => {
                let (rel, non) = self.feedback_sets(corpus)?;
                let q = rocchio_refine(&self.query, &rel, &non, &self.cfg.rocchio)?;
                cosine_scores(corpus, &self.scope, &q)
            }
        };
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numerical("non-finite ranking scores".into()));
        }
        self.iteration += 1;
        self.install(corpus, scores)?;
        Ok(self.latest())
    }

    /// Labeled relevant / non-relevant items, excluding the query item.
    fn feedback_sets(&self, corpus: &FeatureCorpus) -> Result<(FeatureSet, FeatureSet)> {
        let mut rel = FeatureSet::new(corpus.dim());
        let mut non = FeatureSet::new(corpus.dim());
        for (&i, &l) in &self.pool {
            if Some(i) == self.query_item {
                continue;
            }
            if l {
                rel.push(&corpus.row_f64(i))?;
            } else {
                non.push(&corpus.row_f64(i))?;
            }
        }
        Ok((rel, non))
    }

    fn install(&mut self, corpus: &FeatureCorpus, scores: Vec<f64>) -> Result<()> {
        self.ranking = rank_order(&scores).into_iter().map(|p| self.scope[p]).collect();
        self.scores = scores;
        let (ap, pk) = self.metrics(corpus)?;
        let snap = RankingSnapshot {
            iteration: self.iteration,
            labeled: self.pool.len(),
            top: self.top(self.cfg.digest_k),
            average_precision: ap,
            precision_at_k: pk,
        };
        self.history.push(snap);
        Ok(())
    }

    fn metrics(&self, corpus: &FeatureCorpus) -> Result<(Option<f64>, Option<f64>)> {
        let Some(class) = self.relevant_class else {
            return Ok((None, None));
        };
        let (mut s, mut y) = (Vec::new(), Vec::new());
        for (p, &i) in self.scope.iter().enumerate() {
            if self.cfg.residual_eval && self.pool.contains_key(&i) {
                continue;
            }
            s.push(self.scores[p]);
            y.push(corpus.class_label(i) == class);
        }
        if !y.iter().any(|&b| b) {
            return Ok((None, None));
        }
        Ok((
            Some(average_precision(&s, &y)?),
            Some(precision_at_k(&s, &y, self.cfg.precision_k)?),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::{gen_synthetic, Split, SyntheticConfig};

    fn corpus() -> FeatureCorpus {
        gen_synthetic(&SyntheticConfig {
            num_classes: 12,
            per_class: 30,
            dim: 8,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    fn session(c: &FeatureCorpus, method: Method) -> RetrievalSession {
        let scope = c.split_indices(Split::Test);
        let q = scope[3];
        let cfg = SessionConfig {
            method,
            ..SessionConfig::default()
        };
        RetrievalSession::new(c, scope, Query::Item(q), cfg, None).unwrap()
    }

    #[test]
    fn proto_on_query_alone_reproduces_cosine_ranking() {
        let c = corpus();
        let mut s = session(&c, Method::Proto);
        let before = s.ranking().to_vec();
        s.refine(&c, None).unwrap();
        assert_eq!(s.ranking(), &before[..]);
        assert_eq!(s.iteration(), 1);
    }

    #[test]
    fn feedback_overwrites_and_pins_query() {
        let c = corpus();
        let mut s = session(&c, Method::Lr);
        let cands = s.candidates(3);
        assert!(cands.iter().all(|&i| !s.is_labeled(i)));
        assert_eq!(s.submit_feedback(&c, &[(cands[0], true), (cands[1], false)]).unwrap(), 3);
        assert_eq!(s.submit_feedback(&c, &[(cands[0], false)]).unwrap(), 3);
        assert_eq!(s.submit_feedback(&c, &[]).unwrap(), 3);
        let q = s.query_item().unwrap();
        assert!(s.submit_feedback(&c, &[(q, false)]).is_err());
        assert!(s.submit_feedback(&c, &[(c.len(), true)]).is_err());
        assert_eq!(s.labeled().filter(|p| !p.1).count(), 2);
    }

    #[test]
    fn history_and_trajectories() {
        let c = corpus();
        let mut s = session(&c, Method::Rocchio);
        for _ in 0..3 {
            let cand = s.candidates(2);
            s.submit_feedback(&c, &[(cand[0], true), (cand[1], false)]).unwrap();
            s.refine(&c, None).unwrap();
        }
        assert_eq!(s.history().len(), 4);
        for (item, traj) in s.rank_trajectories() {
            let present = s.history().iter().filter(|h| h.top.iter().any(|r| r.index == item)).count();
            assert_eq!(traj.len(), present);
        }
        assert!(s.latest().average_precision.is_some());
    }

    #[test]
    fn refine_twice_is_deterministic() {
        let c = corpus();
        let params = HyperClassParams::identity(c.dim());
        let mut s = session(&c, Method::Hc);
        let cand = s.candidates(4);
        s.submit_feedback(&c, &[(cand[0], true), (cand[3], false)]).unwrap();
        s.refine(&c, Some(&params)).unwrap();
        let a = s.ranking().to_vec();
        s.refine(&c, Some(&params)).unwrap();
        assert_eq!(s.ranking(), &a[..]);
        assert!(s.refine(&c, None).is_err());
    }

    #[test]
    fn raw_vector_queries_check_dimension() {
        let c = corpus();
        let scope = c.split_indices(Split::Test);
        let err = RetrievalSession::new(&c, scope.clone(), Query::Vector(vec![0.1; 3]), SessionConfig::default(), None);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let mut s = RetrievalSession::new(&c, scope, Query::Vector(c.row_f64(0)), SessionConfig {
            method: Method::Proto,
            ..SessionConfig::default()
        }, None)
        .unwrap();
        assert_eq!(s.labeled_count(), 0);
        assert!(s.latest().average_precision.is_none());
        s.refine(&c, None).unwrap();
    }
}
