//! JSON bodies of the session API.

use std::collections::BTreeMap;

use hyperclass::feature_store::Split;
use hyperclass::session::Method;
use serde::{Deserialize, Serialize};

/// Which corpus rows a session ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    #[default]
    All,
    Train,
    Val,
    Test,
}

impl Scope {
    pub fn split(self) -> Option<Split> {
        match self {
            Scope::All => None,
            Scope::Train => Some(Split::Train),
            Scope::Val => Some(Split::Val),
            Scope::Test => Some(Split::Test),
        }
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Scope::All),
            "train" => Ok(Scope::Train),
            "val" => Ok(Scope::Val),
            "test" => Ok(Scope::Test),
            other => Err(format!("unknown scope {other:?} (all, train, val, test)")),
        }
    }
}

/// `POST /sessions`. Exactly one of `query_id` / `query_vector` is required.
/// `options` is merged over the server's session defaults (same keys as the
/// run-config `session` section).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub query_id: Option<String>,
    #[serde(default)]
    pub query_vector: Option<Vec<f64>>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub scope: Option<Scope>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub options: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultItem {
    /// 1-based.
    pub rank: usize,
    pub id: String,
    pub score: f64,
    /// The session's label for the item, if any.
    pub label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub id: String,
    pub relevant: bool,
}

/// Current state of a session: the top of its ranking plus the labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub method: Method,
    pub scope: Scope,
    pub iteration: usize,
    pub query_id: Option<String>,
    /// Items ranked in this session.
    pub total: usize,
    pub labeled: Vec<LabeledItem>,
    pub results: Vec<ResultItem>,
    /// Present when the relevant class is known from corpus labels.
    pub average_precision: Option<f64>,
    pub precision_at_k: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsQuery {
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRequest {
    pub labels: Vec<LabeledItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub session_id: String,
    pub accepted: usize,
    pub labeled_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestEntry {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotView {
    pub iteration: usize,
    pub labeled: usize,
    pub top: Vec<DigestEntry>,
    pub average_precision: Option<f64>,
    pub precision_at_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPoint {
    pub iteration: usize,
    pub rank: usize,
}

/// `GET /sessions/{id}/history`. Trajectories hold one point per snapshot
/// whose digest contains the item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub session_id: String,
    pub iteration: usize,
    pub digest_k: usize,
    pub snapshots: Vec<SnapshotView>,
    pub trajectories: BTreeMap<String, Vec<RankPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub id: String,
    pub index: usize,
    pub class_label: u32,
    pub split: String,
    pub display_path: Option<String>,
    /// `display_path` resolved against the configured assets base.
    pub asset_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusView {
    pub dim: usize,
    pub count: usize,
    pub normalized: bool,
    pub default_method: Method,
    pub checkpoint_loaded: bool,
}
