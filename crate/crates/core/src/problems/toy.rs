//! Bilinear-coupled quadratic minimax toy.
//!
//! `fbar(x, y) = (c/2) ||x||^2 - 10 y1^2 + x1 y1 - 5 y2^2 + x2 y2` on
//! `x in R^3`, `y in R^2`, so `grad Phi(x) = c x + (x1/20, x2/10, 0)`.

use crate::constants::SmoothnessConstants;
use crate::oracle::{BilevelProblem, MinimaxProblem};
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearToy {
    pub reg: f64,
}

impl BilinearToy {
    pub fn new(reg: f64) -> Self {
        assert!(reg.is_finite() && (0.0..=10.0).contains(&reg), "reg must lie in [0, 10]");
        Self { reg }
    }

    pub fn primal_gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::from([x[0] / 20.0, x[1] / 10.0, 0.0]);
        g.add_scaled(self.reg, x);
        g
    }

    pub fn y_star(&self, x: &Vector) -> Vector {
        Vector::from([x[0] / 20.0, x[1] / 10.0])
    }

    fn fbar(&self, x: &Vector, y: &Vector) -> f64 {
        0.5 * self.reg * x.norm_sq() - 10.0 * y[0] * y[0] + x[0] * y[0] - 5.0 * y[1] * y[1]
            + x[1] * y[1]
    }

    fn fbar_x(&self, x: &Vector, y: &Vector) -> Vector {
        let mut g = Vector::from([y[0], y[1], 0.0]);
        g.add_scaled(self.reg, x);
        g
    }

    fn fbar_y(&self, x: &Vector, y: &Vector) -> Vector {
        Vector::from([-20.0 * y[0] + x[0], -10.0 * y[1] + x[1]])
    }
}

impl MinimaxProblem for BilinearToy {
    fn dim_x(&self) -> usize {
        3
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn constants(&self) -> SmoothnessConstants {
        SmoothnessConstants::new(20.0, 10.0, 0.0, 0.0, 0.0).expect("valid constants")
    }

    fn grad_fbar_x(&self, x: &Vector, y: &Vector) -> Vector {
        self.fbar_x(x, y)
    }

    fn grad_fbar_y(&self, x: &Vector, y: &Vector) -> Vector {
        self.fbar_y(x, y)
    }

    fn value(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.fbar(x, y))
    }
}

impl BilevelProblem for BilinearToy {
    fn dim_x(&self) -> usize {
        3
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn constants(&self) -> SmoothnessConstants {
        MinimaxProblem::constants(self)
    }

    fn grad_f_x(&self, x: &Vector, y: &Vector) -> Vector {
        self.fbar_x(x, y)
    }

    fn grad_f_y(&self, x: &Vector, y: &Vector) -> Vector {
        self.fbar_y(x, y)
    }

    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        -&self.fbar_y(x, y)
    }

    fn hvp_g_yy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        Vector::from([20.0 * v[0], 10.0 * v[1]])
    }

    fn jvp_g_xy(&self, _x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        Vector::from([-v[0], -v[1], 0.0])
    }

    fn value_f(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.fbar(x, y))
    }

    fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(-self.fbar(x, y))
    }
}
