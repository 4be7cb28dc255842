//! Finite-difference and structural spot checks for oracle implementations.
//!
//! These run against the raw problem traits, never through a counting
//! wrapper, so probing a problem leaves run accounting untouched.

use crate::oracle::{BilevelProblem, MinimaxProblem};
use crate::vector::Vector;

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &Vector, b: &Vector) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        a.distance(b) / scale
    }
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient(f: impl Fn(&Vector) -> f64, z: &Vector, h: f64) -> Vector {
    let mut zp = z.clone();
    Vector::from_fn(z.len(), |i| {
        let zi = zp[i];
        zp[i] = zi + h;
        let fp = f(&zp);
        zp[i] = zi - h;
        let fm = f(&zp);
        zp[i] = zi;
        (fp - fm) / (2.0 * h)
    })
}

/// Central-difference directional derivative of a vector field along `v`.
pub fn fd_directional(field: impl Fn(&Vector) -> Vector, z: &Vector, v: &Vector, h: f64) -> Vector {
    let mut plus = z.clone();
    plus.add_scaled(h, v);
    let mut minus = z.clone();
    minus.add_scaled(-h, v);
    let mut d = &field(&plus) - &field(&minus);
    d.scale(1.0 / (2.0 * h));
    d
}

/// Relative error of each bilevel oracle against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilevelFdReport {
    pub grad_f_x: f64,
    pub grad_f_y: f64,
    pub grad_g_y: f64,
    pub hvp_g_yy: f64,
    pub jvp_g_xy: f64,
}

impl BilevelFdReport {
    pub fn max(&self) -> f64 {
        [
            self.grad_f_x,
            self.grad_f_y,
            self.grad_g_y,
            self.hvp_g_yy,
            self.jvp_g_xy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks all five bilevel oracles at `(x, y)` along probe direction `v`.
///
/// Gradients are compared with differences of `value_f`/`value_g`, so the
/// problem must provide both. The HVP is compared with differences of
/// `grad_g_y` in `y`, and the JVP with differences of `<grad_g_y, v>` in `x`.
pub fn check_bilevel_fd(
    p: &dyn BilevelProblem,
    x: &Vector,
    y: &Vector,
    v: &Vector,
    h: f64,
) -> BilevelFdReport {
    let value_f = |x: &Vector, y: &Vector| p.value_f(x, y).expect("problem must provide value_f");
    let value_g = |x: &Vector, y: &Vector| p.value_g(x, y).expect("problem must provide value_g");

    let fd_fx = fd_gradient(|z| value_f(z, y), x, h);
    let fd_fy = fd_gradient(|z| value_f(x, z), y, h);
    let fd_gy = fd_gradient(|z| value_g(x, z), y, h);
    let fd_hvp = fd_directional(|z| p.grad_g_y(x, z), y, v, h);
    let fd_jvp = fd_gradient(|z| p.grad_g_y(z, y).dot(v), x, h);

    BilevelFdReport {
        grad_f_x: relative_error(&p.grad_f_x(x, y), &fd_fx),
        grad_f_y: relative_error(&p.grad_f_y(x, y), &fd_fy),
        grad_g_y: relative_error(&p.grad_g_y(x, y), &fd_gy),
        hvp_g_yy: relative_error(&p.hvp_g_yy(x, y, v), &fd_hvp),
        jvp_g_xy: relative_error(&p.jvp_g_xy(x, y, v), &fd_jvp),
    }
}

/// `|<u, H v> - <v, H u>|` for the lower-level Hessian.
pub fn hvp_symmetry_defect(p: &dyn BilevelProblem, x: &Vector, y: &Vector, u: &Vector, v: &Vector) -> f64 {
    (u.dot(&p.hvp_g_yy(x, y, v)) - v.dot(&p.hvp_g_yy(x, y, u))).abs()
}

/// Rayleigh quotient `<v, H v> / ||v||^2` of the lower-level Hessian; at
/// least `mu` for a valid problem.
pub fn hvp_rayleigh(p: &dyn BilevelProblem, x: &Vector, y: &Vector, v: &Vector) -> f64 {
    v.dot(&p.hvp_g_yy(x, y, v)) / v.norm_sq()
}

/// `-<grad_y fbar(x, a) - grad_y fbar(x, b), a - b> / ||a - b||^2`; at least
/// `mu` when `fbar(x, .)` is `mu`-strongly concave.
pub fn minimax_monotonicity(p: &dyn MinimaxProblem, x: &Vector, a: &Vector, b: &Vector) -> f64 {
    let dg = &p.grad_fbar_y(x, a) - &p.grad_fbar_y(x, b);
    let dy = a - b;
    -dg.dot(&dy) / dy.norm_sq()
}

/// Relative errors of the two minimax gradients against differences of `value`.
pub fn check_minimax_fd(p: &dyn MinimaxProblem, x: &Vector, y: &Vector, h: f64) -> (f64, f64) {
    let value = |x: &Vector, y: &Vector| p.value(x, y).expect("problem must provide value");
    let fd_x = fd_gradient(|z| value(z, y), x, h);
    let fd_y = fd_gradient(|z| value(x, z), y, h);
    (
        relative_error(&p.grad_fbar_x(x, y), &fd_x),
        relative_error(&p.grad_fbar_y(x, y), &fd_y),
    )
}
