//! Quadratic bilevel test problem with closed-form ground truth.
//!
//! `f(x, y) = 0.5 ||x||^2 + b'y` and `g(x, y) = 0.5 ||y - A x||^2`, so
//! `y*(x) = A x`, `v* = b`, `grad Phi(x) = x + A'b` and `Phi` is minimized at
//! `x* = -A'b`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constants::SmoothnessConstants;
use crate::error::{invalid, Result};
use crate::oracle::BilevelProblem;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadBilevelParams {
    /// `d_y` rows of length `d_x`.
    pub a_matrix: Vec<Vec<f64>>,
    pub b_vec: Vector,
    /// Declared Lipschitz constant of `f` on the region of interest.
    /// Defaults to `1 + ||b||`.
    pub m_bound: Option<f64>,
}

impl QuadBilevelParams {
    pub fn new(a_matrix: Vec<Vec<f64>>, b_vec: Vector) -> Self {
        Self {
            a_matrix,
            b_vec,
            m_bound: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadBilevel {
    a: DMatrix<f64>,
    b: Vector,
    constants: SmoothnessConstants,
}

pub fn make_quad_bilevel(p: QuadBilevelParams) -> Result<QuadBilevel> {
    let dy = p.a_matrix.len();
    if dy == 0 || p.a_matrix[0].is_empty() {
        return Err(invalid("a_matrix", "must have at least one row and column"));
    }
    let dx = p.a_matrix[0].len();
    if p.a_matrix.iter().any(|row| row.len() != dx) {
        return Err(invalid("a_matrix", "rows have different lengths"));
    }
    if p.b_vec.len() != dy {
        return Err(invalid("b_vec", format!("expected length {dy}, got {}", p.b_vec.len())));
    }
    let a = DMatrix::from_fn(dy, dx, |i, j| p.a_matrix[i][j]);
    if a.iter().any(|e| !e.is_finite()) {
        return Err(invalid("a_matrix", "entries must be finite"));
    }

    let ata = a.transpose() * &a;
    let lam_max = ata.symmetric_eigenvalues().max().max(0.0);
    let ell = 1.0_f64.max(lam_max).max(lam_max.sqrt());
    let m_bound = p.m_bound.unwrap_or(1.0 + p.b_vec.norm());
    let constants = SmoothnessConstants::new(ell, 1.0, 0.0, m_bound, 0.0)?;
    Ok(QuadBilevel {
        a,
        b: p.b_vec,
        constants,
    })
}

/// `A` with i.i.d. `N(0, 1/d_y)` entries and `b` with `N(0, 1)` entries.
pub fn random_quad_bilevel(dx: usize, dy: usize, seed: u64) -> QuadBilevel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dy as f64).sqrt();
    let a = (0..dy)
        .map(|_| {
            (0..dx)
                .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z })
                .collect()
        })
        .collect();
    let b = Vector::from_fn(dy, |_| StandardNormal.sample(&mut rng));
    make_quad_bilevel(QuadBilevelParams::new(a, b)).expect("random instance is valid")
}

impl QuadBilevel {
    fn a_times(&self, x: &Vector) -> Vector {
        let dx = self.a.ncols();
        Vector::from_raw(
            (0..self.a.nrows())
                .map(|i| (0..dx).map(|j| self.a[(i, j)] * x[j]).sum())
                .collect(),
        )
    }

    fn at_times(&self, v: &Vector) -> Vector {
        let dy = self.a.nrows();
        Vector::from_raw(
            (0..self.a.ncols())
                .map(|j| (0..dy).map(|i| self.a[(i, j)] * v[i]).sum())
                .collect(),
        )
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_vec(&self) -> &Vector {
        &self.b
    }

    pub fn y_star(&self, x: &Vector) -> Vector {
        self.a_times(x)
    }

    /// `x + A'b`.
    pub fn hypergradient(&self, x: &Vector) -> Vector {
        let mut g = x.clone();
        g.add_scaled(1.0, &self.at_times(&self.b));
        g
    }

    /// `0.5 ||x||^2 + b'A x`.
    pub fn phi(&self, x: &Vector) -> f64 {
        0.5 * x.norm_sq() + self.b.dot(&self.a_times(x))
    }

    pub fn minimizer(&self) -> Vector {
        -&self.at_times(&self.b)
    }
}

impl BilevelProblem for QuadBilevel {
    fn dim_x(&self) -> usize {
        self.a.ncols()
    }

    fn dim_y(&self) -> usize {
        self.a.nrows()
    }

    fn constants(&self) -> SmoothnessConstants {
        self.constants
    }

    fn grad_f_x(&self, x: &Vector, _y: &Vector) -> Vector {
        x.clone()
    }

    fn grad_f_y(&self, _x: &Vector, _y: &Vector) -> Vector {
        self.b.clone()
    }

    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        y - &self.a_times(x)
    }

    fn hvp_g_yy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        v.clone()
    }

    fn jvp_g_xy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        -&self.at_times(v)
    }

    fn value_f(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(0.5 * x.norm_sq() + self.b.dot(y))
    }

    fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(0.5 * (y - &self.a_times(x)).norm_sq())
    }
}
