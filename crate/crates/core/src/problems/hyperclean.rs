//! Data hyper-cleaning: learn per-sample weights `sigmoid(lambda_i)` on a
//! corrupted training set so that the ridge-regularized multinomial model fits
//! a clean validation set.
//!
//! Upper level `f(lambda, W) = mean_val CE(W)`; lower level
//! `g(lambda, W) = mean_i sigmoid(lambda_i) CE_i(W) + c_r ||W||^2`.

use crate::constants::SmoothnessConstants;
use crate::error::{invalid, Error, Result};
use crate::oracle::BilevelProblem;
use crate::vector::Vector;

use super::data::{synth_dataset, Dataset};
use super::multinomial as mn;

#[derive(Debug, Clone)]
pub struct HypercleanParams {
    pub train_set: Dataset,
    pub val_set: Dataset,
    pub c_r: f64,
    /// Corruption rate the training labels were generated with; informational.
    pub corruption_rate: f64,
}

impl HypercleanParams {
    pub fn new(train_set: Dataset, val_set: Dataset) -> Self {
        Self {
            train_set,
            val_set,
            c_r: 0.001,
            corruption_rate: 0.0,
        }
    }

    /// Synthetic instance: corrupted training set and clean validation set
    /// drawn from the same clusters, rows scaled to unit norm, then a bias
    /// column appended.
    pub fn synthetic(
        n_train: usize,
        n_val: usize,
        d: usize,
        c: usize,
        corruption: f64,
        seed: u64,
    ) -> Self {
        let all = synth_dataset(n_train + n_val, d, c, corruption, seed)
            .normalized()
            .with_bias();
        let clusters = all.clusters.clone().expect("synthetic data records clusters");
        let train = Dataset {
            features: all.features[..n_train].to_vec(),
            labels: all.labels[..n_train].to_vec(),
            clusters: Some(clusters[..n_train].to_vec()),
        };
        let val = Dataset::from_indices(all.features[n_train..].to_vec(), &clusters[n_train..], c)
            .expect("cluster indices are valid labels");
        Self {
            train_set: train,
            val_set: val,
            c_r: 0.001,
            corruption_rate: corruption,
        }
    }

    pub fn with_c_r(mut self, c_r: f64) -> Self {
        self.c_r = c_r;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Hyperclean {
    train: Dataset,
    val: Dataset,
    c_r: f64,
    classes: usize,
    features: usize,
    constants: SmoothnessConstants,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_d1(t: f64) -> f64 {
    let s = sigmoid(t);
    s * (1.0 - s)
}

pub(crate) fn check_datasets(train: &Dataset, val: &Dataset) -> Result<(usize, usize)> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Dataset("training and validation sets must be nonempty".into()));
    }
    if !train.is_one_hot() || !val.is_one_hot() {
        return Err(Error::Dataset("labels must be one-hot".into()));
    }
    let (c, d) = (train.num_classes(), train.num_features());
    if val.num_classes() != c || val.num_features() != d {
        return Err(Error::Dataset("training and validation shapes differ".into()));
    }
    if d == 0 || c == 0 {
        return Err(Error::Dataset("positive dimensions required".into()));
    }
    Ok((c, d))
}

pub fn make_hyperclean(p: HypercleanParams) -> Result<Hyperclean> {
    if !(p.c_r.is_finite() && p.c_r > 0.0) {
        return Err(invalid("c_r", "must be positive and finite"));
    }
    if !(0.0..=1.0).contains(&p.corruption_rate) {
        return Err(invalid("corruption_rate", "must lie in [0, 1]"));
    }
    let (c, d) = check_datasets(&p.train_set, &p.val_set)?;
    let r_sq = p.train_set.max_feature_norm_sq().max(p.val_set.max_feature_norm_sq());
    let r = r_sq.sqrt();
    let mu = 2.0 * p.c_r;
    let ell = 0.5 * r_sq + mu + std::f64::consts::SQRT_2 * r / 4.0;
    let constants = SmoothnessConstants::new(ell, mu, r_sq * r + r_sq, std::f64::consts::SQRT_2 * r, r_sq * r_sq)?;
    Ok(Hyperclean {
        train: p.train_set,
        val: p.val_set,
        c_r: p.c_r,
        classes: c,
        features: d,
        constants,
    })
}

impl Hyperclean {
    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn num_features(&self) -> usize {
        self.features
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn val_set(&self) -> &Dataset {
        &self.val
    }

    /// Fraction of validation samples whose highest logit is the label.
    pub fn val_accuracy(&self, w: &Vector) -> f64 {
        let (c, d) = (self.classes, self.features);
        let hits = (0..self.val.len())
            .filter(|&i| {
                let z = mn::logits(w.as_slice(), c, d, &self.val.features[i]);
                let arg = (0..c).max_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap();
                self.val.label_index(i) == Some(arg)
            })
            .count();
        hits as f64 / self.val.len() as f64
    }
}

impl BilevelProblem for Hyperclean {
    fn dim_x(&self) -> usize {
        self.train.len()
    }

    fn dim_y(&self) -> usize {
        self.classes * self.features
    }

    fn constants(&self) -> SmoothnessConstants {
        self.constants
    }

    fn grad_f_x(&self, _x: &Vector, _y: &Vector) -> Vector {
        Vector::zeros(self.dim_x())
    }

    fn grad_f_y(&self, _x: &Vector, y: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let mut out = vec![0.0; c * d];
        let s = 1.0 / self.val.len() as f64;
        for (xi, yi) in self.val.features.iter().zip(&self.val.labels) {
            mn::add_grad(y.as_slice(), c, d, xi, yi, s, &mut out);
        }
        Vector::from_raw(out)
    }

    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let mut out: Vec<f64> = y.iter().map(|w| 2.0 * self.c_r * w).collect();
        let n = self.train.len() as f64;
        for (i, (xi, yi)) in self.train.features.iter().zip(&self.train.labels).enumerate() {
            mn::add_grad(y.as_slice(), c, d, xi, yi, sigmoid(x[i]) / n, &mut out);
        }
        Vector::from_raw(out)
    }

    fn hvp_g_yy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let mut out: Vec<f64> = v.iter().map(|w| 2.0 * self.c_r * w).collect();
        let n = self.train.len() as f64;
        for (i, xi) in self.train.features.iter().enumerate() {
            mn::add_hvp(y.as_slice(), c, d, xi, v.as_slice(), sigmoid(x[i]) / n, &mut out);
        }
        Vector::from_raw(out)
    }

    fn jvp_g_xy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let n = self.train.len() as f64;
        Vector::from_raw(
            self.train
                .features
                .iter()
                .zip(&self.train.labels)
                .enumerate()
                .map(|(i, (xi, yi))| {
                    sigmoid_d1(x[i]) / n * mn::grad_dot(y.as_slice(), c, d, xi, yi, v.as_slice())
                })
                .collect(),
        )
    }

    fn value_f(&self, _x: &Vector, y: &Vector) -> Option<f64> {
        let (c, d) = (self.classes, self.features);
        let total: f64 = self
            .val
            .features
            .iter()
            .zip(&self.val.labels)
            .map(|(xi, yi)| mn::cross_entropy(y.as_slice(), c, d, xi, yi))
            .sum();
        Some(total / self.val.len() as f64)
    }

    fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        let (c, d) = (self.classes, self.features);
        let n = self.train.len() as f64;
        let data: f64 = self
            .train
            .features
            .iter()
            .zip(&self.train.labels)
            .enumerate()
            .map(|(i, (xi, yi))| sigmoid(x[i]) * mn::cross_entropy(y.as_slice(), c, d, xi, yi))
            .sum();
        Some(data / n + self.c_r * y.norm_sq())
    }
}
