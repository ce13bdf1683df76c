//! Iris and Wine loading, validation, feature scaling and splitting.
//!
//! Both files use the UCI layouts. Iris: four floats then the class name.
//! Wine: the class number (1..=3) then thirteen floats.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const IRIS_CLASSES: [&str; 3] = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"];
const WINE_CLASSES: [&str; 3] = ["1", "2", "3"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    Iris,
    Wine,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Iris => "iris",
            DatasetKind::Wine => "wine",
        }
    }

    pub fn n_features(self) -> usize {
        match self {
            DatasetKind::Iris => 4,
            DatasetKind::Wine => 13,
        }
    }

    pub fn n_classes(self) -> usize {
        3
    }

    /// Expected per-class sample counts of the canonical file.
    pub fn class_counts(self) -> [usize; 3] {
        match self {
            DatasetKind::Iris => [50, 50, 50],
            DatasetKind::Wine => [59, 71, 48],
        }
    }

    pub fn n_samples(self) -> usize {
        self.class_counts().iter().sum()
    }

    pub fn class_names(self) -> [&'static str; 3] {
        match self {
            DatasetKind::Iris => IRIS_CLASSES,
            DatasetKind::Wine => WINE_CLASSES,
        }
    }

    /// File name inside the data directory.
    pub fn file_name(self) -> &'static str {
        match self {
            DatasetKind::Iris => "iris.data",
            DatasetKind::Wine => "wine.data",
        }
    }

    /// Canonical UCI download location.
    pub fn source_url(self) -> &'static str {
        match self {
            DatasetKind::Iris => "https://archive.ics.uci.edu/ml/machine-learning-databases/iris/iris.data",
            DatasetKind::Wine => "https://archive.ics.uci.edu/ml/machine-learning-databases/wine/wine.data",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iris" => Ok(DatasetKind::Iris),
            "wine" => Ok(DatasetKind::Wine),
            other => Err(Error::Config(format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Reads and validates a UCI-format file.
pub fn load_csv(path: &Path, kind: DatasetKind) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, kind, path)
}

pub fn parse_csv(text: &str, kind: DatasetKind, origin: &Path) -> Result<Dataset> {
    let n_feat = kind.n_features();
    let names = kind.class_names();
    let mut features = Vec::new();
    let mut labels = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n_feat + 1 {
            return Err(bad(format!(
                "expected {} fields, found {}",
                n_feat + 1,
                fields.len()
            )));
        }
        let (label_field, value_fields) = match kind {
            DatasetKind::Iris => (fields[n_feat], &fields[..n_feat]),
            DatasetKind::Wine => (fields[0], &fields[1..]),
        };
        let label = match kind {
            DatasetKind::Iris => names
                .iter()
                .position(|n| *n == label_field || n.strip_prefix("Iris-") == Some(label_field)),
            DatasetKind::Wine => names.iter().position(|n| *n == label_field),
        }
        .ok_or_else(|| bad(format!("unknown class `{label_field}`")))?;
        let row = value_fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad numeric field `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(row);
        labels.push(label);
    }

    let dataset = Dataset {
        name: kind.as_str().to_string(),
        features,
        labels,
        class_names: names.iter().map(|s| s.to_string()).collect(),
    };
    if dataset.len() != kind.n_samples() {
        return Err(Error::Integrity(format!(
            "{} expects {} rows, found {}",
            kind,
            kind.n_samples(),
            dataset.len()
        )));
    }
    let hist = dataset.class_histogram();
    if hist != kind.class_counts() {
        return Err(Error::Integrity(format!(
            "{} expects class counts {:?}, found {:?}",
            kind,
            kind.class_counts(),
            hist
        )));
    }
    Ok(dataset)
}

/// Serializes back into the UCI layout `parse_csv` reads.
pub fn to_uci_string(dataset: &Dataset, kind: DatasetKind) -> String {
    let mut out = String::new();
    for (row, &label) in dataset.features.iter().zip(&dataset.labels) {
        let values: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let class = &dataset.class_names[label];
        match kind {
            DatasetKind::Iris => writeln!(out, "{},{}", values.join(","), class),
            DatasetKind::Wine => writeln!(out, "{},{}", class, values.join(",")),
        }
        .unwrap();
    }
    out
}

/// Per-column min-max constants used by [`scale_features`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureScaling {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaling {
    pub fn fit(dataset: &Dataset) -> Result<Self> {
        let n = dataset.n_features();
        let mut mins = vec![f64::INFINITY; n];
        let mut maxs = vec![f64::NEG_INFINITY; n];
        for row in &dataset.features {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        if let Some(j) = (0..n).find(|&j| maxs[j] <= mins[j]) {
            return Err(Error::DegenerateColumn(j));
        }
        Ok(Self { mins, maxs })
    }

    /// Maps `[min, max]` of column `j` onto `[0, pi]`.
    pub fn apply(&self, j: usize, value: f64) -> f64 {
        let t = (value - self.mins[j]) / (self.maxs[j] - self.mins[j]);
        PI * t
    }
}

/// Min-max scales every column to `[0, pi]` using constants from the whole
/// dataset.
pub fn scale_features(dataset: &Dataset) -> Result<(Dataset, FeatureScaling)> {
    let scaling = FeatureScaling::fit(dataset)?;
    let features = dataset
        .features
        .iter()
        .map(|row| row.iter().enumerate().map(|(j, &v)| scaling.apply(j, v)).collect())
        .collect();
    Ok((
        Dataset {
            features,
            ..dataset.clone()
        },
        scaling,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Per-class shuffled split; each class contributes
/// `round(train_fraction * count)` samples to the training side, kept within
/// `[1, count - 1]`. Both index lists come back sorted.
pub fn stratified_split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in 0..dataset.class_names.len() {
        let mut members: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels[i] == class)
            .collect();
        if members.len() < 2 {
            return Err(Error::Integrity(format!(
                "class {} has {} samples, need at least 2 to split",
                dataset.class_names[class],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((train_fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        validation.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    validation.sort_unstable();
    Ok(SplitIndices { train, validation })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
