//! Dataset ingestion and semi-supervised label sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LABEL_COLUMN: &str = "label";
pub const DEFAULT_OUTLIER_SENTINEL: &str = "o";

/// Class of a point: a normal cluster id or the outlier sentinel.
///
/// The derived ordering puts every cluster before `Outlier` and clusters in
/// ascending id order, which is the tie order used by vote counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Cluster(u32),
    Outlier,
}

impl Class {
    pub fn is_outlier(self) -> bool {
        matches!(self, Class::Outlier)
    }

    pub fn cluster(self) -> Option<u32> {
        match self {
            Class::Cluster(c) => Some(c),
            Class::Outlier => None,
        }
    }
}

/// Feature matrix plus ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    dim: usize,
    values: Vec<f64>,
    truth: Vec<Class>,
}

/// Table-style characteristics of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub instances: usize,
    pub attributes: usize,
    pub outliers: usize,
    pub clusters: usize,
}

impl Dataset {
    /// Builds a dataset from a row-major value buffer.
    ///
    /// Cluster ids in `truth` are remapped to `0..K` in first-appearance
    /// order, so callers may pass arbitrary ids.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        values: Vec<f64>,
        truth: Vec<Class>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "need at least one feature"));
        }
        if truth.is_empty() {
            return Err(Error::Empty("dataset has no points".into()));
        }
        if values.len() != dim * truth.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: dim * truth.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadCell {
                row: pos / dim,
                column: format!("#{}", pos % dim),
                value: values[pos].to_string(),
            });
        }
        let mut remap = HashMap::new();
        let truth = truth
            .into_iter()
            .map(|c| match c {
                Class::Outlier => Class::Outlier,
                Class::Cluster(raw) => {
                    let next = remap.len() as u32;
                    Class::Cluster(*remap.entry(raw).or_insert(next))
                }
            })
            .collect();
        Ok(Dataset {
            name: name.into(),
            dim,
            values,
            truth,
        })
    }

    /// Convenience constructor from per-row vectors.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        truth: Vec<Class>,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::RaggedRow {
                row,
                found: r.len(),
                expected: dim,
            });
        }
        if rows.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: truth.len(),
            });
        }
        Self::new(name, dim, rows.concat(), truth)
    }

    /// Reads a dataset from a CSV file with a header row.
    pub fn load_csv(
        path: impl AsRef<Path>,
        label_column: &str,
        outlier_sentinel: &str,
    ) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv_reader(name, file, label_column, outlier_sentinel)
    }

    pub fn from_csv_reader<R: Read>(
        name: impl Into<String>,
        reader: R,
        label_column: &str,
        outlier_sentinel: &str,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
            return Err(Error::Empty("file has no header row".into()));
        }
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(*n) {
                return Err(Error::Header(format!("duplicate column '{n}'")));
            }
        }
        let label_pos = names
            .iter()
            .position(|n| *n == label_column)
            .ok_or_else(|| Error::Header(format!("label column '{label_column}' not found")))?;
        let dim = names.len() - 1;
        if dim == 0 {
            return Err(Error::Header("no feature columns besides the label".into()));
        }

        let mut values = Vec::new();
        let mut raw_labels: Vec<String> = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != names.len() {
                return Err(Error::RaggedRow {
                    row: line,
                    found: record.len(),
                    expected: names.len(),
                });
            }
            for (col, cell) in record.iter().enumerate() {
                if col == label_pos {
                    raw_labels.push(cell.trim().to_owned());
                    continue;
                }
                let v: f64 = cell
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| Error::BadCell {
                        row: line,
                        column: names[col].to_owned(),
                        value: cell.to_owned(),
                    })?;
                values.push(v);
            }
        }
        if raw_labels.is_empty() {
            return Err(Error::Empty("file has a header but no data rows".into()));
        }

        let mut ids: HashMap<&str, u32> = HashMap::new();
        let truth = raw_labels
            .iter()
            .map(|l| {
                if l == outlier_sentinel {
                    Class::Outlier
                } else {
                    let next = ids.len() as u32;
                    Class::Cluster(*ids.entry(l.as_str()).or_insert(next))
                }
            })
            .collect();
        Ok(Dataset {
            name: name.into(),
            dim,
            values,
            truth,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Row-major feature buffer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn truth(&self) -> &[Class] {
        &self.truth
    }

    /// Number of distinct normal clusters.
    pub fn cluster_count(&self) -> usize {
        self.truth
            .iter()
            .filter_map(|c| c.cluster())
            .map(|c| c as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn outlier_count(&self) -> usize {
        self.truth.iter().filter(|c| c.is_outlier()).count()
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            instances: self.len(),
            attributes: self.dim,
            outliers: self.outlier_count(),
            clusters: self.cluster_count(),
        }
    }

    /// Rescales every feature column to `[0, 1]`. Constant columns become 0.
    pub fn min_max_scaled(&self) -> Dataset {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k % self.dim;
                let span = hi[j] - lo[j];
                if span > 0.0 {
                    (v - lo[j]) / span
                } else {
                    0.0
                }
            })
            .collect();
        Dataset {
            values,
            ..self.clone()
        }
    }
}

/// User-visible labels: normal labels per cluster and labeled outliers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    normal: BTreeMap<usize, u32>,
    outliers: BTreeSet<usize>,
}

impl LabelSet {
    /// Validates disjointness and that every index is below `n`.
    pub fn new(n: usize, normal: BTreeMap<usize, u32>, outliers: BTreeSet<usize>) -> Result<Self> {
        for &i in normal.keys().chain(outliers.iter()) {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        if let Some(i) = normal.keys().find(|i| outliers.contains(i)) {
            return Err(Error::Precondition(format!(
                "point {i} is labeled both normal and outlier"
            )));
        }
        Ok(LabelSet { normal, outliers })
    }

    /// Labels exactly the given indices with their ground truth.
    pub fn from_truth(ds: &Dataset, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut normal = BTreeMap::new();
        let mut outliers = BTreeSet::new();
        for i in indices {
            match ds.truth().get(i) {
                Some(Class::Cluster(c)) => {
                    normal.insert(i, *c);
                }
                Some(Class::Outlier) => {
                    outliers.insert(i);
                }
                None => {
                    return Err(Error::IndexOutOfRange {
                        index: i,
                        len: ds.len(),
                    })
                }
            }
        }
        Ok(LabelSet { normal, outliers })
    }

    pub fn normal(&self) -> &BTreeMap<usize, u32> {
        &self.normal
    }

    pub fn outliers(&self) -> &BTreeSet<usize> {
        &self.outliers
    }

    pub fn label_of(&self, i: usize) -> Option<Class> {
        if let Some(&c) = self.normal.get(&i) {
            Some(Class::Cluster(c))
        } else if self.outliers.contains(&i) {
            Some(Class::Outlier)
        } else {
            None
        }
    }

    /// All labeled indices in ascending order.
    pub fn labeled(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .normal
            .keys()
            .chain(self.outliers.iter())
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn len(&self) -> usize {
        self.normal.len() + self.outliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy with the given indices removed.
    pub fn without(&self, hidden: &BTreeSet<usize>) -> LabelSet {
        LabelSet {
            normal: self
                .normal
                .iter()
                .filter(|(i, _)| !hidden.contains(i))
                .map(|(&i, &c)| (i, c))
                .collect(),
            outliers: self.outliers.difference(hidden).copied().collect(),
        }
    }
}

/// Number of labels drawn for a fraction: `round(fraction * n)`, half up.
pub fn label_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(
            "fraction",
            format!("{fraction} is outside (0, 1]"),
        ));
    }
    let count = (fraction * n as f64).round() as usize;
    if count == 0 {
        return Err(Error::param(
            "fraction",
            format!("{fraction} of {n} points rounds to zero labels"),
        ));
    }
    Ok(count.min(n))
}

/// Labels `round(fraction * n)` points drawn uniformly without replacement.
pub fn sample_labels(ds: &Dataset, fraction: f64, seed: u64) -> Result<LabelSet> {
    let count = label_count(ds.len(), fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, ds.len(), count);
    LabelSet::from_truth(ds, picked)
}

/// Like [`sample_labels`] but first draws one point from every true cluster.
pub fn sample_labels_stratified(ds: &Dataset, fraction: f64, seed: u64) -> Result<LabelSet> {
    let count = label_count(ds.len(), fraction)?;
    let k = ds.cluster_count();
    if count < k {
        return Err(Error::param(
            "fraction",
            format!("{count} labels cannot cover {k} clusters"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, c) in ds.truth().iter().enumerate() {
        if let Some(c) = c.cluster() {
            members[c as usize].push(i);
        }
    }
    let mut chosen: BTreeSet<usize> = members
        .iter()
        .map(|m| *m.choose(&mut rng).expect("remapped cluster ids are dense"))
        .collect();
    let rest: Vec<usize> = (0..ds.len()).filter(|i| !chosen.contains(i)).collect();
    let extra = index::sample(&mut rng, rest.len(), count - chosen.len());
    chosen.extend(extra.into_iter().map(|j| rest[j]));
    LabelSet::from_truth(ds, chosen)
}
