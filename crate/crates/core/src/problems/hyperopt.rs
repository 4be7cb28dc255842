//! Hyperparameter optimization of per-feature regularization weights.
//!
//! Upper level `f(lambda, w) = mean_val CE(w)`; lower level
//! `g(lambda, w) = mean_train CE(w) + (1/(2cp)) sum_jk exp(lambda_k) w_jk^2`.

use crate::constants::SmoothnessConstants;
use crate::error::{invalid, Error, Result};
use crate::oracle::BilevelProblem;
use crate::vector::Vector;

use super::data::Dataset;
use super::hyperclean::check_datasets;
use super::multinomial as mn;

#[derive(Debug, Clone)]
pub struct HyperoptParams {
    pub train_set: Dataset,
    pub val_set: Dataset,
    pub num_classes: usize,
    pub num_features: usize,
    /// Declared bound on `|lambda_k|`, used for the smoothness constants.
    pub lambda_box: f64,
}

impl HyperoptParams {
    pub fn new(train_set: Dataset, val_set: Dataset) -> Self {
        let num_classes = train_set.num_classes();
        let num_features = train_set.num_features();
        Self {
            train_set,
            val_set,
            num_classes,
            num_features,
            lambda_box: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hyperopt {
    train: Dataset,
    val: Dataset,
    classes: usize,
    features: usize,
    constants: SmoothnessConstants,
}

pub fn make_hyperopt(p: HyperoptParams) -> Result<Hyperopt> {
    if !(p.lambda_box.is_finite() && p.lambda_box >= 0.0) {
        return Err(invalid("lambda_box", "must be nonnegative and finite"));
    }
    let (c, d) = check_datasets(&p.train_set, &p.val_set)?;
    if c != p.num_classes || d != p.num_features {
        return Err(Error::Dataset(format!(
            "datasets have {c} classes and {d} features, expected {} and {}",
            p.num_classes, p.num_features
        )));
    }
    let r_sq = p.train_set.max_feature_norm_sq().max(p.val_set.max_feature_norm_sq());
    let r = r_sq.sqrt();
    let cp = (c * d) as f64;
    let hi = p.lambda_box.exp() / cp;
    let mu = (-p.lambda_box).exp() / cp;
    let constants = SmoothnessConstants::new(
        0.5 * r_sq + hi + std::f64::consts::SQRT_2 * r,
        mu,
        r_sq * r + hi,
        std::f64::consts::SQRT_2 * r,
        r_sq * r_sq + hi,
    )?;
    Ok(Hyperopt {
        train: p.train_set,
        val: p.val_set,
        classes: c,
        features: d,
        constants,
    })
}

impl Hyperopt {
    fn cp(&self) -> f64 {
        (self.classes * self.features) as f64
    }

    fn mean_grad(&self, set: &Dataset, w: &Vector, out: &mut [f64]) {
        let s = 1.0 / set.len() as f64;
        for (xi, yi) in set.features.iter().zip(&set.labels) {
            mn::add_grad(w.as_slice(), self.classes, self.features, xi, yi, s, out);
        }
    }

    fn mean_ce(&self, set: &Dataset, w: &Vector) -> f64 {
        let total: f64 = set
            .features
            .iter()
            .zip(&set.labels)
            .map(|(xi, yi)| mn::cross_entropy(w.as_slice(), self.classes, self.features, xi, yi))
            .sum();
        total / set.len() as f64
    }
}

impl BilevelProblem for Hyperopt {
    fn dim_x(&self) -> usize {
        self.features
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
        let mut out = vec![0.0; self.dim_y()];
        self.mean_grad(&self.val, y, &mut out);
        Vector::from_raw(out)
    }

    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        let d = self.features;
        let cp = self.cp();
        let mut out: Vec<f64> = (0..self.dim_y()).map(|i| x[i % d].exp() * y[i] / cp).collect();
        self.mean_grad(&self.train, y, &mut out);
        Vector::from_raw(out)
    }

    fn hvp_g_yy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let cp = self.cp();
        let mut out: Vec<f64> = (0..self.dim_y()).map(|i| x[i % d].exp() * v[i] / cp).collect();
        let s = 1.0 / self.train.len() as f64;
        for xi in &self.train.features {
            mn::add_hvp(y.as_slice(), c, d, xi, v.as_slice(), s, &mut out);
        }
        Vector::from_raw(out)
    }

    fn jvp_g_xy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        let (c, d) = (self.classes, self.features);
        let cp = self.cp();
        Vector::from_raw(
            (0..d)
                .map(|k| x[k].exp() / cp * (0..c).map(|j| y[j * d + k] * v[j * d + k]).sum::<f64>())
                .collect(),
        )
    }

    fn value_f(&self, _x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.mean_ce(&self.val, y))
    }

    fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        let d = self.features;
        let reg: f64 = (0..self.dim_y()).map(|i| x[i % d].exp() * y[i] * y[i]).sum::<f64>() / (2.0 * self.cp());
        Some(self.mean_ce(&self.train, y) + reg)
    }
}
