//! Labeled datasets: synthetic generation and a plain-text format.
//!
//! Text format: a header line `# rahgd-dataset v1`, then one sample per line
//! with whitespace- or comma-separated features and the class index last.
//! Blank lines and further `#` lines are ignored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "# rahgd-dataset v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    /// One row per sample; one-hot for well-formed data.
    pub labels: Vec<Vec<f64>>,
    /// Generating cluster of each sample, when known.
    pub clusters: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature rows but {} label rows",
                features.len(),
                labels.len()
            )));
        }
        if let Some(first) = features.first() {
            if features.iter().any(|f| f.len() != first.len()) {
                return Err(Error::Dataset("feature rows have different lengths".into()));
            }
        }
        if let Some(first) = labels.first() {
            if labels.iter().any(|l| l.len() != first.len()) {
                return Err(Error::Dataset("label rows have different lengths".into()));
            }
        }
        if features.iter().chain(&labels).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Dataset("non-finite entry".into()));
        }
        Ok(Self {
            features,
            labels,
            clusters: None,
        })
    }

    /// Builds one-hot labels from class indices.
    pub fn from_indices(features: Vec<Vec<f64>>, labels: &[usize], num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Dataset(format!("label {bad} out of range for {num_classes} classes")));
        }
        Self::new(features, labels.iter().map(|&l| one_hot(l, num_classes)).collect())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }

    /// Index of the single 1 in a one-hot row.
    pub fn label_index(&self, i: usize) -> Option<usize> {
        let row = &self.labels[i];
        let ones: Vec<usize> = (0..row.len()).filter(|&j| row[j] == 1.0).collect();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        (ones.len() == 1 && zeros + 1 == row.len()).then(|| ones[0])
    }

    pub fn is_one_hot(&self) -> bool {
        (0..self.len()).all(|i| self.label_index(i).is_some())
    }

    pub fn max_feature_norm_sq(&self) -> f64 {
        self.features
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Copy with every nonzero feature vector scaled to unit norm.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.features {
            let n = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                f.iter_mut().for_each(|v| *v /= n);
            }
        }
        out
    }

    /// Copy with a constant 1 appended to every feature vector.
    pub fn with_bias(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.features {
            f.push(1.0);
        }
        out
    }

    pub fn to_text(&self) -> Result<String> {
        let mut s = String::from(DATASET_HEADER);
        s.push('\n');
        for i in 0..self.len() {
            let label = self
                .label_index(i)
                .ok_or_else(|| Error::Dataset(format!("row {i} is not one-hot")))?;
            for v in &self.features[i] {
                s.push_str(&format!("{v:e} "));
            }
            s.push_str(&format!("{label}\n"));
        }
        Ok(s)
    }

    /// Parses the text format. The class count is the largest index plus one
    /// unless `num_classes` is given.
    pub fn from_text(text: &str, num_classes: Option<usize>) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some(DATASET_HEADER) => {}
            Some(h) => return Err(Error::Dataset(format!("unsupported header {h:?}"))),
            None => return Err(Error::Dataset("empty input".into())),
        }
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            let (last, rest) = fields
                .split_last()
                .ok_or_else(|| Error::Dataset(format!("line {}: no fields", n + 2)))?;
            let label: usize = last
                .parse()
                .map_err(|_| Error::Dataset(format!("line {}: bad label {last:?}", n + 2)))?;
            let row = rest
                .iter()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Dataset(format!("line {}: {e}", n + 2)))?;
            features.push(row);
            labels.push(label);
        }
        let c = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        Self::from_indices(features, &labels, c)
    }
}

fn one_hot(j: usize, c: usize) -> Vec<f64> {
    let mut v = vec![0.0; c];
    v[j] = 1.0;
    v
}

/// Gaussian class clusters in `R^d` (no bias column), one-hot labels.
///
/// Cluster means have `N(0, 4/d)` coordinates and samples add `N(0, 1/d)`
/// noise, so feature norms stay O(1) as `d` grows. Each label is corrupted
/// with probability `corruption` by resampling uniformly among the other
/// classes; with a single class nothing can be corrupted.
pub fn synth_dataset(n: usize, d: usize, c: usize, corruption: f64, seed: u64) -> Dataset {
    assert!(n >= 1 && d >= 1 && c >= 1, "n, d and c must be at least 1");
    assert!((0.0..=1.0).contains(&corruption), "corruption must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let df = d as f64;
    let mean_dist = Normal::new(0.0, 2.0 / df.sqrt()).expect("valid normal");
    let noise = Normal::new(0.0, 1.0 / df.sqrt()).expect("valid normal");
    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| (0..d).map(|_| mean_dist.sample(&mut rng)).collect())
        .collect();

    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut clusters = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(0..c);
        features.push(means[k].iter().map(|m| m + noise.sample(&mut rng)).collect());
        let flip = rng.gen::<f64>() < corruption;
        let label = if flip && c > 1 {
            let other = rng.gen_range(0..c - 1);
            if other >= k {
                other + 1
            } else {
                other
            }
        } else {
            k
        };
        labels.push(label);
        clusters.push(k);
    }
    let mut ds = Dataset::from_indices(features, &labels, c).expect("generated data is valid");
    ds.clusters = Some(clusters);
    ds
}
