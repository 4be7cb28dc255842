//! Inner-loop engines: Nesterov accelerated gradient descent for strongly
//! convex objectives and linear conjugate gradient for SPD systems.
//!
//! Both run either a fixed number of iterations or, when a tolerance is
//! given, stop at the first iterate whose gradient (residual) norm is
//! below it.

use crate::error::{invalid, Error, Result};
use crate::vector::Vector;

/// Parameters of [`agd`].
///
/// `t_max` is the iteration count in fixed mode and the cap on gradient
/// calls in adaptive mode (`tol` set).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgdParams {
    pub alpha: f64,
    pub beta: f64,
    pub t_max: usize,
    pub tol: Option<f64>,
}

impl AgdParams {
    pub fn new(alpha: f64, beta: f64, t_max: usize) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            t_max,
            tol: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Step `1/ell_h` and momentum `(sqrt(k) - 1) / (sqrt(k) + 1)` for an
    /// `ell_h`-smooth, `mu_h`-strongly convex target.
    pub fn for_strongly_convex(ell_h: f64, mu_h: f64, t_max: usize) -> Result<Self> {
        let sk = (ell_h / mu_h).sqrt();
        Self::new(1.0 / ell_h, (sk - 1.0) / (sk + 1.0), t_max)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.tol = Some(tol);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("must lie in [0, 1), got {}", self.beta)));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(invalid("tol", format!("must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgdOutput {
    pub z: Vector,
    /// Gradient calls made.
    pub iters: usize,
    /// Always true in fixed mode. In adaptive mode, whether the tolerance
    /// was met before the cap.
    pub converged: bool,
}

/// Accelerated gradient descent started at `z0`.
///
/// Fixed mode returns `z_T` of the recursion
/// `z_{t+1} = zt_t - alpha grad(zt_t)`, `zt_{t+1} = z_{t+1} + beta (z_{t+1} - z_t)`
/// with `zt_0 = z0`. Adaptive mode returns the first extrapolated point
/// `zt_t` whose gradient norm is at most `tol`.
pub fn agd(grad: impl FnMut(&Vector) -> Vector, z0: &Vector, p: &AgdParams) -> Result<AgdOutput> {
    agd_with_observer(grad, z0, p, |_, _| {})
}

/// [`agd`] that also reports every `z_t`, `t >= 1`, to `observe`.
pub fn agd_with_observer(
    mut grad: impl FnMut(&Vector) -> Vector,
    z0: &Vector,
    p: &AgdParams,
    mut observe: impl FnMut(usize, &Vector),
) -> Result<AgdOutput> {
    p.validate()?;
    let mut z = z0.clone();
    let mut z_ext = z0.clone();
    for t in 0..p.t_max {
        let g = grad(&z_ext);
        if !g.is_finite() {
            return Err(Error::Divergence {
                routine: "agd",
                iteration: t,
            });
        }
        if let Some(tol) = p.tol {
            if g.norm() <= tol {
                return Ok(AgdOutput {
                    z: z_ext,
                    iters: t + 1,
                    converged: true,
                });
            }
        }
        let mut z_next = z_ext;
        z_next.add_scaled(-p.alpha, &g);
        let mut ext = z_next.clone();
        ext.scale(1.0 + p.beta);
        ext.add_scaled(-p.beta, &z);
        if !ext.is_finite() {
            return Err(Error::Divergence {
                routine: "agd",
                iteration: t,
            });
        }
        z = z_next;
        z_ext = ext;
        observe(t + 1, &z);
    }
    Ok(AgdOutput {
        z,
        iters: p.t_max,
        converged: p.tol.is_none(),
    })
}

/// Parameters of [`cg`]. `t_max` is the iteration count, or the cap when
/// `tol` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgParams {
    pub t_max: usize,
    pub tol: Option<f64>,
}

impl CgParams {
    pub fn fixed(t_max: usize) -> Self {
        Self { t_max, tol: None }
    }

    pub fn adaptive(t_max: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {tol}")));
        }
        Ok(Self {
            t_max,
            tol: Some(tol),
        })
    }
}

/// Residual norms below this fraction of `||b||` end CG cleanly.
pub const CG_BREAKDOWN: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutput {
    pub q: Vector,
    /// CG steps taken.
    pub iters: usize,
    /// Applications of the linear map, including the initial residual.
    pub matvecs: usize,
    /// Recursively updated residual `A q - b` at exit.
    pub residual: Vector,
    pub converged: bool,
}

/// Linear conjugate gradient for `A q = b` from `q0`.
pub fn cg(apply_a: impl FnMut(&Vector) -> Vector, b: &Vector, q0: &Vector, p: &CgParams) -> Result<CgOutput> {
    cg_with_observer(apply_a, b, q0, p, |_, _| {})
}

/// [`cg`] that also reports every `q_t`, `t >= 1`, to `observe`.
pub fn cg_with_observer(
    mut apply_a: impl FnMut(&Vector) -> Vector,
    b: &Vector,
    q0: &Vector,
    p: &CgParams,
    mut observe: impl FnMut(usize, &Vector),
) -> Result<CgOutput> {
    assert_eq!(b.len(), q0.len(), "cg: b and q0 dimensions differ");
    if p.t_max == 0 && p.tol.is_none() {
        return Ok(CgOutput {
            q: q0.clone(),
            iters: 0,
            matvecs: 0,
            residual: Vector::zeros(0),
            converged: true,
        });
    }

    let breakdown = CG_BREAKDOWN * b.norm();
    let mut q = q0.clone();
    let mut r = &apply_a(&q) - b;
    let mut matvecs = 1;
    if !r.is_finite() {
        return Err(Error::Divergence {
            routine: "cg",
            iteration: 0,
        });
    }
    let mut dir = -&r;
    let mut rr = r.norm_sq();

    let mut t = 0;
    let converged = loop {
        let rnorm = rr.sqrt();
        if rnorm <= breakdown || p.tol.is_some_and(|tol| rnorm <= tol) {
            break true;
        }
        if t == p.t_max {
            break p.tol.is_none();
        }
        let ad = apply_a(&dir);
        matvecs += 1;
        let curvature = dir.dot(&ad);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite {
                curvature,
                iteration: t,
            });
        }
        let step = rr / curvature;
        q.add_scaled(step, &dir);
        r.add_scaled(step, &ad);
        if !q.is_finite() || !r.is_finite() {
            return Err(Error::Divergence {
                routine: "cg",
                iteration: t,
            });
        }
        let rr_next = r.norm_sq();
        let beta = rr_next / rr;
        dir.scale(beta);
        dir.add_scaled(-1.0, &r);
        rr = rr_next;
        t += 1;
        observe(t, &q);
    };

    Ok(CgOutput {
        q,
        iters: t,
        matvecs,
        residual: r,
        converged,
    })
}
