//! Feature corpora: the on-disk embedding format, validation, L2
//! normalization and a seeded synthetic generator.
//!
//! A corpus on disk is a JSON manifest plus one flat little-endian `f32`
//! blob, row-major, no header:
//!
//! ```json
//! { "dim": 2, "count": 3, "dtype": "f32le", "blob": "features.bin",
//!   "ids": ["a", "b", "c"], "class_labels": [0, 0, 1],
//!   "splits": ["train", "train", "test"], "normalized": false }
//! ```
//!
//! `display_paths` is optional (one entry per row, `null` allowed).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "features.bin";
const DTYPE: &str = "f32le";
const UNIT_NORM_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::UnknownSplit(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    pub blob: String,
    pub ids: Vec<String>,
    pub class_labels: Vec<u32>,
    pub splits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_paths: Option<Vec<Option<String>>>,
    #[serde(default)]
    pub normalized: bool,
}

/// Immutable matrix of feature rows with per-row metadata.
#[derive(Debug, Clone)]
pub struct FeatureCorpus {
    dim: usize,
    data: Vec<f32>,
    ids: Vec<String>,
    class_labels: Vec<u32>,
    splits: Vec<Split>,
    display_paths: Option<Vec<Option<String>>>,
    normalized: bool,
    id_index: HashMap<String, usize>,
}

impl FeatureCorpus {
    /// Build and validate a corpus. With `normalize`, rows are scaled to unit
    /// L2 norm (zero rows are rejected).
    pub fn new(
        dim: usize,
        data: Vec<f32>,
        ids: Vec<String>,
        class_labels: Vec<u32>,
        splits: Vec<Split>,
        display_paths: Option<Vec<Option<String>>>,
        normalize: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Manifest("dim must be positive".into()));
        }
        let rows = ids.len();
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                actual: data.len(),
            });
        }
        if class_labels.len() != rows || splits.len() != rows {
            return Err(Error::Manifest(format!(
                "{rows} ids but {} class labels and {} split tags",
                class_labels.len(),
                splits.len()
            )));
        }
        if let Some(p) = &display_paths {
            if p.len() != rows {
                return Err(Error::Manifest(format!(
                    "{rows} ids but {} display paths",
                    p.len()
                )));
            }
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        let mut id_index = HashMap::with_capacity(rows);
        for (i, id) in ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let mut class_split: HashMap<u32, Split> = HashMap::new();
        for (&c, &s) in class_labels.iter().zip(&splits) {
            match class_split.insert(c, s) {
                Some(prev) if prev != s => {
                    return Err(Error::Manifest(format!(
                        "class {c} appears in both {prev} and {s} splits"
                    )))
                }
                _ => {}
            }
        }
        let mut corpus = Self {
            dim,
            data,
            ids,
            class_labels,
            splits,
            display_paths,
            normalized: false,
            id_index,
        };
        if normalize {
            corpus.normalize()?;
        }
        Ok(corpus)
    }

    fn normalize(&mut self) -> Result<()> {
        for (i, row) in self.data.chunks_exact_mut(self.dim).enumerate() {
            let n = row
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt();
            if n == 0.0 {
                return Err(Error::ZeroNorm(i));
            }
            for x in row.iter_mut() {
                *x = (f64::from(*x) / n) as f32;
            }
        }
        self.normalized = true;
        Ok(())
    }

    /// A copy with every row scaled to unit L2 norm.
    pub fn normalized_copy(&self) -> Result<Self> {
        let mut c = self.clone();
        c.normalize()?;
        Ok(c)
    }

    /// Mean row of one split, or `None` when the split is empty.
    pub fn split_mean(&self, split: Split) -> Option<Vec<f64>> {
        let rows = self.split_indices(split);
        if rows.is_empty() {
            return None;
        }
        let mut m = vec![0.0; self.dim];
        for &i in &rows {
            for (a, &x) in m.iter_mut().zip(self.row(i)) {
                *a += f64::from(x);
            }
        }
        let n = rows.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        Some(m)
    }

    /// A copy with `mean` subtracted from every row. A normalized corpus is
    /// re-normalized afterwards, so cosine geometry is measured around the
    /// new origin.
    pub fn centered_copy(&self, mean: &[f64]) -> Result<Self> {
        if mean.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: mean.len(),
            });
        }
        let mut c = self.clone();
        for row in c.data.chunks_exact_mut(self.dim) {
            for (x, m) in row.iter_mut().zip(mean) {
                *x = (f64::from(*x) - m) as f32;
            }
        }
        if self.normalized {
            c.normalize()?;
        }
        Ok(c)
    }

    /// Center on the mean of the meta-training split (falling back to all
    /// rows when there is no train split). HyperClass has no scalar intercept,
    /// so a shared offset in the features otherwise leaks into its weights.
    pub fn centered_on_train(&self) -> Result<Self> {
        let mean = match self.split_mean(Split::Train) {
            Some(m) => m,
            None => {
                let n = self.len().max(1) as f64;
                let mut m = vec![0.0; self.dim];
                for row in self.data.chunks_exact(self.dim) {
                    for (a, &x) in m.iter_mut().zip(row) {
                        *a += f64::from(x) / n;
                    }
                }
                m
            }
        };
        self.centered_copy(&mean)
    }

    /// Load a corpus from its manifest path (or the directory holding
    /// `manifest.json`).
    pub fn load(path: impl AsRef<Path>, normalize: bool) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path.push(MANIFEST_FILE);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        if manifest.dtype != DTYPE {
            return Err(Error::Manifest(format!(
                "unsupported dtype {:?}, expected {DTYPE:?}",
                manifest.dtype
            )));
        }
        if manifest.ids.len() != manifest.count {
            return Err(Error::Manifest(format!(
                "count is {} but {} ids listed",
                manifest.count,
                manifest.ids.len()
            )));
        }
        let blob_path = path
            .parent()
            .map(|p| p.join(&manifest.blob))
            .unwrap_or_else(|| PathBuf::from(&manifest.blob));
        let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        let expected = manifest.dim * manifest.count * 4;
        if bytes.len() != expected {
            return Err(Error::BlobLength {
                expected,
                actual: bytes.len(),
            });
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let splits = manifest
            .splits
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Split>>>()?;
        let mut corpus = Self::new(
            manifest.dim,
            data,
            manifest.ids,
            manifest.class_labels,
            splits,
            manifest.display_paths,
            false,
        )?;
        if manifest.normalized {
            corpus.check_unit_norm()?;
            corpus.normalized = true;
        }
        if normalize && !corpus.normalized {
            corpus.normalize()?;
        }
        Ok(corpus)
    }

    fn check_unit_norm(&self) -> Result<()> {
        for i in 0..self.len() {
            let n = self.row_norm(i);
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Manifest(format!(
                    "manifest claims normalized rows but row {i} has norm {n}"
                )));
            }
        }
        Ok(())
    }

    /// Write `manifest.json` and `features.bin` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            dim: self.dim,
            count: self.len(),
            dtype: DTYPE.into(),
            blob: BLOB_FILE.into(),
            ids: self.ids.clone(),
            class_labels: self.class_labels.clone(),
            splits: self.splits.iter().map(|s| s.as_str().to_string()).collect(),
            display_paths: self.display_paths.clone(),
            normalized: self.normalized,
        };
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for x in &self.data {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        let blob = dir.join(BLOB_FILE);
        fs::write(&blob, bytes).map_err(|e| Error::io(&blob, e))?;
        let mpath = dir.join(MANIFEST_FILE);
        fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)
            .map_err(|e| Error::io(&mpath, e))?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&x| f64::from(x)).collect()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i)
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn class_label(&self, i: usize) -> u32 {
        self.class_labels[i]
    }

    pub fn class_labels(&self) -> &[u32] {
        &self.class_labels
    }

    pub fn split(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn display_path(&self, i: usize) -> Option<&str> {
        self.display_paths
            .as_ref()
            .and_then(|p| p[i].as_deref())
    }

    /// Row indices belonging to `split`, in corpus order.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Class id → row indices (corpus order) for one split.
    pub fn classes_in(&self, split: Split) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            if self.splits[i] == split {
                out.entry(self.class_labels[i]).or_default().push(i);
            }
        }
        out
    }

    pub fn class_set(&self, split: Split) -> BTreeSet<u32> {
        self.classes_in(split).into_keys().collect()
    }
}

/// Parameters of the seeded Gaussian-cluster generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub mean_scale: f64,
    pub seed: u64,
    /// train / val / test fractions of the classes.
    pub split_fractions: [f64; 3],
    pub normalize: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_classes: 50,
            per_class: 100,
            dim: 64,
            noise_sigma: 0.35,
            mean_scale: 1.0,
            seed: 0,
            split_fractions: [0.6, 0.2, 0.2],
            normalize: true,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_classes < 3 {
            return bad("synthetic corpus needs at least 3 classes");
        }
        if self.per_class < 1 {
            return bad("per_class must be at least 1");
        }
        if self.dim < 1 {
            return bad("dim must be positive");
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma must be a finite nonnegative number");
        }
        if !(self.mean_scale > 0.0) || !self.mean_scale.is_finite() {
            return bad("mean_scale must be positive");
        }
        let sum: f64 = self.split_fractions.iter().sum();
        if self.split_fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return bad("split fractions must be nonnegative and sum to 1");
        }
        Ok(())
    }

    /// Number of classes assigned to train / val / test.
    pub fn split_class_counts(&self) -> Result<[usize; 3]> {
        let c = self.num_classes as f64;
        let train = (c * self.split_fractions[0]).round() as usize;
        let val = (c * self.split_fractions[1]).round() as usize;
        let test = self
            .num_classes
            .checked_sub(train + val)
            .ok_or_else(|| Error::InvalidConfig("split rounding exceeds class count".into()))?;
        let counts = [train, val, test];
        for (k, (&n, &f)) in counts.iter().zip(&self.split_fractions).enumerate() {
            if f > 0.0 && n == 0 {
                return Err(Error::InvalidConfig(format!(
                    "{} split has fraction {f} but rounds to zero classes",
                    Split::ALL[k]
                )));
            }
        }
        Ok(counts)
    }
}

/// Draw a Gaussian-cluster corpus. Each class mean has i.i.d. entries with
/// standard deviation `mean_scale / sqrt(dim)` (expected norm ≈ `mean_scale`);
/// each sample adds i.i.d. noise with standard deviation `noise_sigma`.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<FeatureCorpus> {
    cfg.validate()?;
    let counts = cfg.split_class_counts()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mean_std = cfg.mean_scale / (cfg.dim as f64).sqrt();

    let means: Vec<Vec<f64>> = (0..cfg.num_classes)
        .map(|_| {
            (0..cfg.dim)
                .map(|_| mean_std * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..cfg.num_classes).collect();
    order.shuffle(&mut rng);
    let mut class_split = vec![Split::Train; cfg.num_classes];
    for (rank, &c) in order.iter().enumerate() {
        class_split[c] = if rank < counts[0] {
            Split::Train
        } else if rank < counts[0] + counts[1] {
            Split::Val
        } else {
            Split::Test
        };
    }

    let rows = cfg.num_classes * cfg.per_class;
    let mut data = Vec::with_capacity(rows * cfg.dim);
    let mut ids = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    let mut splits = Vec::with_capacity(rows);
    for (c, mean) in means.iter().enumerate() {
        for k in 0..cfg.per_class {
            for &m in mean {
                let noise: f64 = StandardNormal.sample(&mut rng);
                data.push((m + cfg.noise_sigma * noise) as f32);
            }
            ids.push(format!("c{c:03}-{k:04}"));
            labels.push(c as u32);
            splits.push(class_split[c]);
        }
    }
    FeatureCorpus::new(cfg.dim, data, ids, labels, splits, None, cfg.normalize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny(data: Vec<f32>, normalize: bool) -> Result<FeatureCorpus> {
        let n = data.len() / 2;
        FeatureCorpus::new(
            2,
            data,
            (0..n).map(|i| format!("r{i}")).collect(),
            vec![0; n],
            vec![Split::Train; n],
            None,
            normalize,
        )
    }

    fn write_manifest(dir: &Path, dim: usize, count: usize, blob: &[u8], extra: &str) {
        let ids: Vec<String> = (0..count).map(|i| format!("\"r{i}\"")).collect();
        let labels = vec!["0"; count].join(",");
        let splits = vec!["\"train\""; count].join(",");
        let m = format!(
            r#"{{"dim":{dim},"count":{count},"dtype":"f32le","blob":"features.bin",
                "ids":[{}],"class_labels":[{labels}],"splits":[{splits}]{extra}}}"#,
            ids.join(",")
        );
        fs::write(dir.join(MANIFEST_FILE), m).unwrap();
        fs::write(dir.join(BLOB_FILE), blob).unwrap();
    }

    fn le(xs: &[f32]) -> Vec<u8> {
        xs.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    #[test]
    fn load_counts_rows() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), 2, 3, &le(&[1., 2., 3., 4., 5., 6.]), "");
        let c = FeatureCorpus::load(dir.path(), false).unwrap();
        assert_eq!((c.len(), c.dim()), (3, 2));
        assert_eq!(c.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn load_rejects_short_blob() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), 2, 3, &[0u8; 20], "");
        assert!(matches!(
            FeatureCorpus::load(dir.path(), false),
            Err(Error::BlobLength { expected: 24, actual: 20 })
        ));
    }

    #[test]
    fn load_rejects_bad_split_and_nan() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), 1, 1, &le(&[1.0]), "");
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE))
            .unwrap()
            .replace("\"train\"", "\"holdout\"");
        fs::write(dir.path().join(MANIFEST_FILE), text).unwrap();
        assert!(matches!(
            FeatureCorpus::load(dir.path(), false),
            Err(Error::UnknownSplit(s)) if s == "holdout"
        ));

        write_manifest(dir.path(), 1, 2, &le(&[1.0, f32::NAN]), "");
        assert!(matches!(
            FeatureCorpus::load(dir.path(), false),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn load_normalizes_3_4_5() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), 2, 1, &le(&[3.0, 4.0]), "");
        let c = FeatureCorpus::load(dir.path().join(MANIFEST_FILE), true).unwrap();
        assert!(c.is_normalized());
        assert!((c.row(0)[0] - 0.6).abs() < 1e-7 && (c.row(0)[1] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn rejects_duplicates_zero_rows_and_shared_classes() {
        let err = FeatureCorpus::new(
            1,
            vec![1.0, 2.0],
            vec!["a".into(), "a".into()],
            vec![0, 0],
            vec![Split::Train; 2],
            None,
            false,
        );
        assert!(matches!(err, Err(Error::DuplicateId(_))));
        assert!(matches!(tiny(vec![1.0, 0.0, 0.0, 0.0], true), Err(Error::ZeroNorm(1))));
        let err = FeatureCorpus::new(
            1,
            vec![1.0, 2.0],
            vec!["a".into(), "b".into()],
            vec![0, 0],
            vec![Split::Train, Split::Test],
            None,
            false,
        );
        assert!(matches!(err, Err(Error::Manifest(_))));
    }

    #[test]
    fn manifest_claiming_unit_norm_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), 2, 1, &le(&[3.0, 4.0]), r#","normalized":true"#);
        assert!(matches!(
            FeatureCorpus::load(dir.path(), false),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let cfg = SyntheticConfig {
            num_classes: 10,
            per_class: 20,
            dim: 8,
            ..Default::default()
        };
        let a = gen_synthetic(&cfg).unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a.class_labels().iter().collect::<BTreeSet<_>>().len(), 10);
        let b = gen_synthetic(&cfg).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(a.ids(), b.ids());
        let tr = a.class_set(Split::Train);
        let va = a.class_set(Split::Val);
        let te = a.class_set(Split::Test);
        assert_eq!((tr.len(), va.len(), te.len()), (6, 2, 2));
        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
    }

    #[test]
    fn zero_noise_rows_equal_class_mean() {
        let cfg = SyntheticConfig {
            num_classes: 4,
            per_class: 5,
            dim: 6,
            noise_sigma: 0.0,
            normalize: false,
            ..Default::default()
        };
        let c = gen_synthetic(&cfg).unwrap();
        for class in 0..4 {
            let first = c.row(class * 5).to_vec();
            for k in 1..5 {
                assert_eq!(c.row(class * 5 + k), &first[..]);
            }
        }
    }

    #[test]
    fn centering_on_train_zeroes_the_train_mean() {
        let cfg = SyntheticConfig {
            num_classes: 10,
            per_class: 8,
            dim: 6,
            normalize: false,
            ..Default::default()
        };
        let c = gen_synthetic(&cfg).unwrap();
        let centered = c.centered_on_train().unwrap();
        assert!(!centered.is_normalized());
        for m in centered.split_mean(Split::Train).unwrap() {
            assert!(m.abs() < 1e-6);
        }
        let unit = gen_synthetic(&SyntheticConfig { normalize: true, ..cfg }).unwrap();
        let centered = unit.centered_on_train().unwrap();
        assert!(centered.is_normalized());
        for i in 0..centered.len() {
            assert!((centered.row_norm(i) - 1.0).abs() < 1e-5);
        }
        assert!(c.centered_copy(&[0.0; 3]).is_err());
        assert_eq!(c.centered_copy(&[0.0; 6]).unwrap().data(), c.data());
    }

    #[test]
    fn split_rounding_to_zero_is_rejected() {
        let cfg = SyntheticConfig {
            num_classes: 3,
            split_fractions: [0.9, 0.05, 0.05],
            ..Default::default()
        };
        assert!(matches!(gen_synthetic(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = SyntheticConfig {
            num_classes: 2,
            ..Default::default()
        };
        assert!(gen_synthetic(&cfg).is_err());
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let cfg = SyntheticConfig {
            num_classes: 5,
            per_class: 7,
            dim: 5,
            ..Default::default()
        };
        let c = gen_synthetic(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path()).unwrap();
        let back = FeatureCorpus::load(dir.path(), false).unwrap();
        let bits = |xs: &[f32]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(c.data()), bits(back.data()));
        assert_eq!(c.ids(), back.ids());
        assert_eq!(c.class_labels(), back.class_labels());
        assert!(back.is_normalized());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(rows in prop::collection::vec(
            prop::collection::vec(-100.0f32..100.0, 4), 1..20)) {
            prop_assume!(rows.iter().all(|r| r.iter().any(|x| x.abs() > 1e-3)));
            let data: Vec<f32> = rows.concat();
            let n = rows.len();
            let once = FeatureCorpus::new(4, data, (0..n).map(|i| i.to_string()).collect(),
                vec![0; n], vec![Split::Test; n], None, true).unwrap();
            let twice = once.normalized_copy().unwrap();
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() <= 1e-7);
            }
        }
    }
}
