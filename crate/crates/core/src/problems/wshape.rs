//! W-shaped minimax benchmark with a strict saddle at the origin.
//!
//! `fbar(x, y) = w(x3) - 10 y1^2 + x1 y1 - 5 y2^2 + x2 y2` with the piecewise
//! cubic `w`. The primal function is `w(x3) + x1^2/40 + x2^2/20`.

use crate::constants::SmoothnessConstants;
use crate::error::{invalid, Result};
use crate::oracle::{BilevelProblem, MinimaxProblem};
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WShapeParams {
    pub eps_w: f64,
    pub l_w: f64,
}

impl Default for WShapeParams {
    fn default() -> Self {
        Self { eps_w: 0.01, l_w: 5.0 }
    }
}

impl WShapeParams {
    fn validate(&self) -> Result<()> {
        if !(self.eps_w.is_finite() && self.eps_w > 0.0) {
            return Err(invalid("eps_w", "must be positive and finite"));
        }
        if !(self.l_w.is_finite() && self.l_w >= 1.0) {
            return Err(invalid("l_w", "must be finite and at least 1"));
        }
        Ok(())
    }

    /// Branch boundaries in increasing order.
    pub fn breakpoints(&self) -> [f64; 5] {
        let s = self.eps_w.sqrt();
        [-self.l_w * s, -s, 0.0, s, self.l_w * s]
    }

    /// Bound on `|w''|` over `|x| <= 2 (L + 1) sqrt(eps)`.
    pub fn curvature_bound(&self) -> f64 {
        let s = self.eps_w.sqrt();
        2.0 * s + 2.0 * (self.l_w + 1.0) * s
    }

    fn branch(&self, x: f64) -> usize {
        let b = self.breakpoints();
        b.iter().position(|&t| x <= t).unwrap_or(5)
    }
}

/// Value of branch `index` (0..6) at `x`, ignoring its domain.
pub fn w_branch(index: usize, x: f64, p: &WShapeParams) -> f64 {
    let e = p.eps_w;
    let s = e.sqrt();
    let c = (p.l_w + 1.0) * s;
    let tail = (3.0 * p.l_w + 1.0) * e * s / 3.0;
    match index {
        0 => s * (x + c).powi(2) - (x + c).powi(3) / 3.0 - tail,
        1 => e * x + e * s / 3.0,
        2 => -s * x * x - x.powi(3) / 3.0,
        3 => -s * x * x + x.powi(3) / 3.0,
        4 => -e * x + e * s / 3.0,
        5 => s * (x - c).powi(2) + (x - c).powi(3) / 3.0 - tail,
        _ => panic!("w-shape has six branches"),
    }
}

/// First derivative of branch `index` at `x`.
pub fn w_branch_d1(index: usize, x: f64, p: &WShapeParams) -> f64 {
    let e = p.eps_w;
    let s = e.sqrt();
    let c = (p.l_w + 1.0) * s;
    match index {
        0 => 2.0 * s * (x + c) - (x + c).powi(2),
        1 => e,
        2 => -2.0 * s * x - x * x,
        3 => -2.0 * s * x + x * x,
        4 => -e,
        5 => 2.0 * s * (x - c) + (x - c).powi(2),
        _ => panic!("w-shape has six branches"),
    }
}

fn w_branch_d2(index: usize, x: f64, p: &WShapeParams) -> f64 {
    let s = p.eps_w.sqrt();
    let c = (p.l_w + 1.0) * s;
    match index {
        0 => 2.0 * s - 2.0 * (x + c),
        1 | 4 => 0.0,
        2 => -2.0 * s - 2.0 * x,
        3 => -2.0 * s + 2.0 * x,
        5 => 2.0 * s + 2.0 * (x - c),
        _ => panic!("w-shape has six branches"),
    }
}

pub fn w_shape(x: f64, p: &WShapeParams) -> f64 {
    w_branch(p.branch(x), x, p)
}

pub fn w_shape_d1(x: f64, p: &WShapeParams) -> f64 {
    w_branch_d1(p.branch(x), x, p)
}

pub fn w_shape_d2(x: f64, p: &WShapeParams) -> f64 {
    w_branch_d2(p.branch(x), x, p)
}

/// The W-shape minimax instance. As a bilevel problem it uses `f = fbar`
/// and `g = -fbar`.
#[derive(Debug, Clone)]
pub struct WShapeMinimax {
    params: WShapeParams,
    constants: SmoothnessConstants,
}

pub fn make_wshape_minimax(params: WShapeParams) -> Result<WShapeMinimax> {
    params.validate()?;
    let constants = SmoothnessConstants::new(20.0, 10.0, 2.0, 0.0, 0.0)?;
    if params.curvature_bound() > constants.ell {
        return Err(invalid(
            "eps_w",
            format!(
                "w'' bound {} exceeds the declared smoothness {}",
                params.curvature_bound(),
                constants.ell
            ),
        ));
    }
    Ok(WShapeMinimax { params, constants })
}

impl WShapeMinimax {
    pub fn params(&self) -> &WShapeParams {
        &self.params
    }

    pub fn initial_x(&self) -> Vector {
        Vector::from([1e-3, 1e-3, 1e-16])
    }

    pub fn initial_y(&self) -> Vector {
        Vector::zeros(2)
    }

    pub fn y_star(&self, x: &Vector) -> Vector {
        Vector::from([x[0] / 20.0, x[1] / 10.0])
    }

    pub fn primal(&self, x: &Vector) -> f64 {
        w_shape(x[2], &self.params) + x[0] * x[0] / 40.0 + x[1] * x[1] / 20.0
    }

    pub fn primal_gradient(&self, x: &Vector) -> Vector {
        Vector::from([x[0] / 20.0, x[1] / 10.0, w_shape_d1(x[2], &self.params)])
    }

    /// Eigenvalues of the primal Hessian, which is diagonal.
    pub fn primal_hessian_diag(&self, x: &Vector) -> [f64; 3] {
        [0.05, 0.1, w_shape_d2(x[2], &self.params)]
    }

    fn fbar(&self, x: &Vector, y: &Vector) -> f64 {
        w_shape(x[2], &self.params) - 10.0 * y[0] * y[0] + x[0] * y[0] - 5.0 * y[1] * y[1]
            + x[1] * y[1]
    }

    fn fbar_x(&self, x: &Vector, y: &Vector) -> Vector {
        Vector::from([y[0], y[1], w_shape_d1(x[2], &self.params)])
    }

    fn fbar_y(&self, x: &Vector, y: &Vector) -> Vector {
        Vector::from([-20.0 * y[0] + x[0], -10.0 * y[1] + x[1]])
    }
}

impl MinimaxProblem for WShapeMinimax {
    fn dim_x(&self) -> usize {
        3
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn constants(&self) -> SmoothnessConstants {
        self.constants
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

impl BilevelProblem for WShapeMinimax {
    fn dim_x(&self) -> usize {
        3
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn constants(&self) -> SmoothnessConstants {
        self.constants
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
