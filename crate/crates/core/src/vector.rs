//! Dense real vectors.
//!
//! Public constructors reject NaN and infinite entries. Arithmetic on
//! vectors that are already finite can still overflow, so every solver
//! checks its iterates with [`Vector::is_finite`] and aborts with a
//! divergence error instead of storing a non-finite iterate.
//!
//! Dimension mismatches are programming errors and panic.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.iter().all(|e| e.is_finite()) {
            Ok(Self(elements))
        } else {
            Err(Error::NonFinite {
                context: "vector construction",
            })
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        let v: Vec<f64> = (0..dim).map(f).collect();
        assert!(
            v.iter().all(|e| e.is_finite()),
            "Vector::from_fn produced a non-finite entry"
        );
        Self(v)
    }

    /// Wraps raw arithmetic output produced inside the crate.
    pub(crate) fn from_raw(elements: Vec<f64>) -> Self {
        Self(elements)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|e| e.is_finite())
    }

    #[track_caller]
    fn check_dim(&self, other: &Vector) {
        assert_eq!(
            self.len(),
            other.len(),
            "vector dimension mismatch: {} vs {}",
            self.len(),
            other.len()
        );
    }

    #[track_caller]
    pub fn dot(&self, other: &Vector) -> f64 {
        self.check_dim(other);
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += a * x`
    #[track_caller]
    pub fn add_scaled(&mut self, a: f64, x: &Vector) {
        self.check_dim(x);
        for (s, xi) in self.0.iter_mut().zip(&x.0) {
            *s += a * xi;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|e| a * e).collect())
    }

    #[track_caller]
    pub fn distance(&self, other: &Vector) -> f64 {
        self.check_dim(other);
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Returns `y + a * x`.
#[track_caller]
pub fn axpy(a: f64, x: &Vector, y: &Vector) -> Vector {
    let mut out = y.clone();
    out.add_scaled(a, x);
    out
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    /// Panics on non-finite input; use [`Vector::new`] for fallible construction.
    fn from(v: Vec<f64>) -> Self {
        Vector::new(v).expect("non-finite entry in Vector::from")
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector::from(v.to_vec())
    }
}

impl<'a> Add<&'a Vector> for &'a Vector {
    type Output = Vector;
    #[track_caller]
    fn add(self, rhs: &'a Vector) -> Vector {
        axpy(1.0, rhs, self)
    }
}

impl<'a> Sub<&'a Vector> for &'a Vector {
    type Output = Vector;
    #[track_caller]
    fn sub(self, rhs: &'a Vector) -> Vector {
        axpy(-1.0, rhs, self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scaled(-1.0)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scaled(self)
    }
}
