#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rahgd_core::{BilevelProblem, SmoothnessConstants, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_| StandardNormal.sample(rng))
}

/// Symmetric positive definite matrix with spectrum in `[mu, mu * kappa]`,
/// both ends attained when `d >= 2`.
pub fn random_spd(d: usize, mu: f64, kappa: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let eig = DVector::<f64>::from_fn(d, |i, _| {
        if d == 1 {
            mu
        } else {
            let t: f64 = if i == 0 {
                0.0
            } else if i == d - 1 {
                1.0
            } else {
                rand::Rng::gen(rng)
            };
            mu * kappa.powf(t)
        }
    });
    let a: DMatrix<f64> = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&a + a.transpose()) * 0.5
}

pub fn mat_vec(a: &DMatrix<f64>, v: &Vector) -> Vector {
    let out = a * DVector::from_column_slice(v.as_slice());
    Vector::from_fn(out.len(), |i| out[i])
}

pub fn solve(a: &DMatrix<f64>, b: &Vector) -> Vector {
    let sol = a
        .clone()
        .cholesky()
        .expect("matrix is SPD")
        .solve(&DVector::from_column_slice(b.as_slice()));
    Vector::from_fn(sol.len(), |i| sol[i])
}

/// `g(x, y) = 1/2 y^T H y - y^T C x` and `f(x, y) = 1/2 ||x||^2 + c^T y + 1/2 ||y||^2`
/// with `H` SPD. Then `y*(x) = H^{-1} C x`.
pub struct SpdBilevel {
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub lin: Vector,
    pub mu: f64,
    pub ell: f64,
}

impl SpdBilevel {
    pub fn random(dx: usize, dy: usize, kappa: f64, seed: u64) -> Self {
        let mut r = rng(seed);
        let h = random_spd(dy, 1.0, kappa, &mut r);
        let c = DMatrix::from_fn(dy, dx, |_, _| {
            let z: f64 = StandardNormal.sample(&mut r);
            z / (dy as f64).sqrt()
        });
        let lin = gaussian_vector(dy, &mut r);
        let c_norm = c.singular_values().max();
        Self {
            h,
            c,
            lin,
            mu: 1.0,
            ell: kappa.max(c_norm).max(1.0),
        }
    }

    pub fn y_star(&self, x: &Vector) -> Vector {
        solve(&self.h, &self.cx(x))
    }

    fn cx(&self, x: &Vector) -> Vector {
        let out = &self.c * DVector::from_column_slice(x.as_slice());
        Vector::from_fn(out.len(), |i| out[i])
    }

    /// Closed-form hypergradient `x + C^T H^{-1} (c + y*(x))`.
    pub fn hypergradient(&self, x: &Vector) -> Vector {
        let ys = self.y_star(x);
        let v = solve(&self.h, &(&self.lin + &ys));
        let ctv = self.c.transpose() * DVector::from_column_slice(v.as_slice());
        x + &Vector::from_fn(ctv.len(), |i| ctv[i])
    }
}

impl BilevelProblem for SpdBilevel {
    fn dim_x(&self) -> usize {
        self.c.ncols()
    }
    fn dim_y(&self) -> usize {
        self.c.nrows()
    }
    fn constants(&self) -> SmoothnessConstants {
        let m = 1.0 + self.lin.norm() + 10.0;
        SmoothnessConstants::new(self.ell, self.mu, 0.0, m, 0.0).unwrap()
    }
    fn grad_f_x(&self, x: &Vector, _y: &Vector) -> Vector {
        x.clone()
    }
    fn grad_f_y(&self, _x: &Vector, y: &Vector) -> Vector {
        &self.lin + y
    }
    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        &mat_vec(&self.h, y) - &self.cx(x)
    }
    fn hvp_g_yy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        mat_vec(&self.h, v)
    }
    fn jvp_g_xy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        let out = -(self.c.transpose() * DVector::from_column_slice(v.as_slice()));
        Vector::from_fn(out.len(), |i| out[i])
    }
    fn value_f(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(0.5 * x.norm_sq() + self.lin.dot(y) + 0.5 * y.norm_sq())
    }
    fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(0.5 * y.dot(&mat_vec(&self.h, y)) - y.dot(&self.cx(x)))
    }
}
