//! Tabular datasets, their schemas, and stratified cross-validation plans.
//!
//! Datasets are header-less comma-separated files. A sidecar schema file has
//! one line per CSV column:
//!
//! ```text
//! numeric
//! categorical            # open: categories are coded in first-seen order
//! categorical: a,b,c     # closed: any other value is rejected
//! label                  # class names are collected from the data
//! label: B,L,R           # closed class list
//! ```
//!
//! Class indices follow the lexicographic order of the class names.
//! Loading freezes the schema (categories and classes filled in), and the
//! frozen schema is what models and test splits are checked against.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical { categories: Vec<String>, closed: bool },
}

impl FeatureKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureKind::Categorical { .. })
    }
}

/// Column layout of a dataset file plus the class list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    features: Vec<FeatureKind>,
    label_column: usize,
    class_names: Vec<String>,
    classes_closed: bool,
}

impl FeatureSchema {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| Error::Schema {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses schema text; errors carry the 1-based line number.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut features = Vec::new();
        let mut label = None;
        let mut class_names = Vec::new();
        let mut classes_closed = false;
        let mut column = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (kind, list) = match line.split_once(':') {
                Some((k, rest)) => (k.trim(), Some(parse_list(rest))),
                None => (line, None),
            };
            match kind {
                "numeric" => {
                    if list.is_some() {
                        return Err((n + 1, "numeric columns take no value list".into()));
                    }
                    features.push(FeatureKind::Numeric);
                }
                "categorical" => {
                    let closed = list.is_some();
                    let categories = list.unwrap_or_default();
                    if has_duplicates(&categories) {
                        return Err((n + 1, "duplicate category".into()));
                    }
                    features.push(FeatureKind::Categorical { categories, closed });
                }
                "label" => {
                    if label.is_some() {
                        return Err((n + 1, "more than one label column".into()));
                    }
                    label = Some(column);
                    if let Some(names) = list {
                        if has_duplicates(&names) {
                            return Err((n + 1, "duplicate class name".into()));
                        }
                        class_names = names;
                        class_names.sort();
                        classes_closed = true;
                    }
                }
                other => return Err((n + 1, format!("unknown column kind `{other}`"))),
            }
            column += 1;
        }
        let label_column = label.ok_or((0, "no label column".to_string()))?;
        Ok(FeatureSchema {
            features,
            label_column,
            class_names,
            classes_closed,
        })
    }

    /// Number of CSV columns, label included.
    pub fn num_columns(&self) -> usize {
        self.features.len() + 1
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureKind] {
        &self.features
    }

    pub fn label_column(&self) -> usize {
        self.label_column
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    /// Canonical text form; parsing it yields an equal, fully closed schema.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut features = self.features.iter();
        for column in 0..self.num_columns() {
            if column == self.label_column {
                let _ = writeln!(out, "label: {}", self.class_names.join(","));
                continue;
            }
            match features.next() {
                Some(FeatureKind::Numeric) => out.push_str("numeric\n"),
                Some(FeatureKind::Categorical { categories, .. }) => {
                    let _ = writeln!(out, "categorical: {}", categories.join(","));
                }
                None => unreachable!("column count mismatch"),
            }
        }
        out
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Closes every open category and class list.
    fn close(&mut self) {
        self.classes_closed = true;
        for f in &mut self.features {
            if let FeatureKind::Categorical { closed, .. } = f {
                *closed = true;
            }
        }
    }
}

fn parse_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn has_duplicates(items: &[String]) -> bool {
    let set: BTreeSet<&String> = items.iter().collect();
    set.len() != items.len()
}

/// Encoded feature rows with integer class labels.
///
/// Categorical values are stored as their integer code, so every feature is
/// an `f64`. Every class of the schema has at least one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<FeatureSchema>,
    features: Vec<f64>,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
    priors: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major features, validating labels and class
    /// coverage.
    pub fn new(schema: Arc<FeatureSchema>, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        let k = schema.num_classes();
        if k < 2 {
            return Err(Error::Data(format!("K ≥ 2 violated: {k} class(es)")));
        }
        let width = schema.num_features();
        if features.len() != labels.len() * width {
            return Err(Error::Data(format!(
                "{} feature values for {} rows of width {width}",
                features.len(),
                labels.len()
            )));
        }
        let mut class_counts = vec![0usize; k];
        for &y in &labels {
            if y >= k {
                return Err(Error::Data(format!("label {y} out of range for K = {k}")));
            }
            class_counts[y] += 1;
        }
        if let Some(missing) = class_counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!(
                "class `{}` has no examples",
                schema.class_names()[missing]
            )));
        }
        let m = labels.len() as f64;
        let priors = class_counts.iter().map(|&c| c as f64 / m).collect();
        Ok(Dataset {
            schema,
            features,
            labels,
            class_counts,
            priors,
        })
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn num_features(&self) -> usize {
        self.schema.num_features()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.num_features();
        &self.features[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Per-class example counts `m_y`.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Empirical class priors `m_y / m`.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Majority class count over minority class count.
    pub fn imbalance_ratio(&self) -> f64 {
        let max = self.class_counts.iter().max().copied().unwrap_or(0);
        let min = self.class_counts.iter().min().copied().unwrap_or(1);
        max as f64 / min as f64
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let w = self.num_features();
        let mut features = Vec::with_capacity(indices.len() * w);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::InvalidInput(format!("row index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset::new(Arc::clone(&self.schema), features, labels)
    }

    /// A stratified random slice keeping `ceil(fraction · m_y)` examples of
    /// every class, in original row order.
    pub fn stratified_subsample(&self, fraction: f64, seed: u64) -> Result<Dataset> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "subsample fraction {fraction} not in (0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
        let mut keep = Vec::new();
        for (class, &count) in self.class_counts.iter().enumerate() {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            members.shuffle(&mut rng);
            let n = ((fraction * count as f64).ceil() as usize).clamp(1, count);
            keep.extend_from_slice(&members[..n]);
        }
        keep.sort_unstable();
        self.subset(&keep)
    }
}

/// Loads a header-less CSV file against `schema`.
///
/// The returned dataset carries the frozen schema: open category lists are
/// filled in first-seen order and the class list is the sorted set of labels
/// found in the file.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, schema).map_err(|e| match e {
        Error::Row {
            row,
            column,
            message,
            ..
        } => Error::Row {
            path: path.to_path_buf(),
            row,
            column,
            message,
        },
        other => other,
    })
}

/// Parses CSV text; see [`load_csv`]. Row errors carry an empty path.
pub fn parse_csv(text: &str, schema: &FeatureSchema) -> Result<Dataset> {
    let mut frozen = schema.clone();
    let row_error = |row: usize, column: usize, message: String| Error::Row {
        path: Default::default(),
        row,
        column,
        message,
    };

    let mut features = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let ncol = frozen.num_columns();
    let label_column = frozen.label_column;
    for (n, line) in text.lines().enumerate() {
        let row = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != ncol {
            return Err(row_error(
                row,
                cells.len(),
                format!("expected {ncol} columns, found {}", cells.len()),
            ));
        }
        let mut feature_idx = 0;
        for (c, cell) in cells.iter().enumerate() {
            let column = c + 1;
            if cell.is_empty() || *cell == "?" {
                return Err(row_error(row, column, "missing value".into()));
            }
            if c == label_column {
                if frozen.classes_closed && frozen.class_index(cell).is_none() {
                    return Err(row_error(row, column, format!("unknown class label `{cell}`")));
                }
                raw_labels.push(cell.to_string());
                continue;
            }
            let value = match &mut frozen.features[feature_idx] {
                FeatureKind::Numeric => {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| row_error(row, column, format!("not a number: `{cell}`")))?;
                    if !v.is_finite() {
                        return Err(row_error(row, column, format!("non-finite value `{cell}`")));
                    }
                    v
                }
                FeatureKind::Categorical { categories, closed } => {
                    match categories.iter().position(|c| c == cell) {
                        Some(code) => code as f64,
                        None if *closed => {
                            return Err(row_error(row, column, format!("unknown category `{cell}`")))
                        }
                        None => {
                            categories.push(cell.to_string());
                            (categories.len() - 1) as f64
                        }
                    }
                }
            };
            features.push(value);
            feature_idx += 1;
        }
    }

    if !frozen.classes_closed {
        let names: BTreeSet<&String> = raw_labels.iter().collect();
        frozen.class_names = names.into_iter().cloned().collect();
    }
    frozen.close();
    let labels = raw_labels
        .iter()
        .map(|name| frozen.class_index(name).expect("class list covers labels"))
        .collect();
    Dataset::new(Arc::new(frozen), features, labels)
}

/// Mixes a base seed with a stream index (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Repeated stratified k-fold assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    /// `assignments[run][fold]` holds the sorted test indices of that fold.
    pub assignments: Vec<Vec<Vec<usize>>>,
}

impl FoldPlan {
    /// Training indices (every other fold of the run), sorted.
    pub fn train_indices(&self, run: usize, fold: usize) -> Vec<usize> {
        let mut train: Vec<usize> = self.assignments[run]
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != fold)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        train.sort_unstable();
        train
    }

    pub fn test_indices(&self, run: usize, fold: usize) -> &[usize] {
        &self.assignments[run][fold]
    }
}

/// Plans `runs` independent stratified `folds`-fold partitions.
///
/// Within a class, examples are shuffled and dealt round-robin, continuing
/// from the fold where the previous class stopped, so per-class counts differ
/// by at most one across folds and fold sizes stay balanced.
pub fn stratified_folds(d: &Dataset, folds: usize, runs: usize, seed: u64) -> Result<FoldPlan> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if folds > d.len() {
        return Err(Error::InvalidInput(format!(
            "{folds} folds requested for {} examples",
            d.len()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.num_classes()];
    for (i, &y) in d.labels().iter().enumerate() {
        by_class[y].push(i);
    }
    let assignments = (0..runs)
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, run as u64));
            let mut plan = vec![Vec::new(); folds];
            let mut next = 0;
            for members in &by_class {
                let mut members = members.clone();
                members.shuffle(&mut rng);
                for i in members {
                    plan[next].push(i);
                    next = (next + 1) % folds;
                }
            }
            for fold in &mut plan {
                fold.sort_unstable();
            }
            plan
        })
        .collect();
    Ok(FoldPlan {
        folds,
        runs,
        seed,
        assignments,
    })
}
