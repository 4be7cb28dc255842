//! Inexact hypergradients from warm-started inner solves.
//!
//! For `Phi(x) = f(x, y*(x))` the hypergradient is
//! `grad_x f - J_xy g (H_yy g)^{-1} grad_y f` evaluated at `y*(x)`. It is
//! approximated by running AGD on `g(w, .)` for `y`, CG on
//! `H_yy g(w, y) v = grad_y f(w, y)` for `v`, and returning
//! `u = grad_x f(w, y) - J_xy g(w, y) v`.
//!
//! Accuracy targets at level `sigma` are `||y - y*(w)|| <= sigma / (2 L~)`
//! and `||v - v*|| <= sigma / (2 ell)`, which together bound
//! `||u - grad Phi(w)|| <= sigma`. Theory mode meets them with closed-form
//! iteration budgets; adaptive mode certifies them through strong
//! convexity, `||z - z*|| <= ||grad h(z)|| / mu`.

use crate::constants::{derive_constants, DerivedConstants, SmoothnessConstants};
use crate::error::{invalid, Error, Result};
use crate::oracle::BilevelOracle;
use crate::subroutines::{agd, cg, AgdParams, CgParams};
use crate::vector::Vector;

/// How inner iteration counts are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMode {
    /// Closed-form budgets from the problem constants.
    Theory,
    /// Run until the gradient-norm certificate holds.
    #[default]
    Adaptive,
}

/// Warm starts carried between outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerState {
    pub y_warm: Vector,
    pub v_warm: Vector,
}

impl InnerState {
    pub fn zeros(dim_y: usize) -> Self {
        Self {
            y_warm: Vector::zeros(dim_y),
            v_warm: Vector::zeros(dim_y),
        }
    }
}

/// Inputs of the closed-form inner budgets.
///
/// `c_hat` bounds `||y*(w)||` at epoch starts and `v_init_norm` is the norm
/// of the very first CG warm start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    pub sigma: f64,
    pub kappa: f64,
    pub l_tilde: f64,
    pub ell: f64,
    pub mu: f64,
    pub m_bound: f64,
    pub big_b: f64,
    pub c_hat: f64,
    pub v_init_norm: f64,
}

fn ceil_log_budget(factor: f64, log_arg: f64) -> usize {
    if !(log_arg > 1.0) {
        return 1;
    }
    let n = (factor * log_arg.ln()).ceil();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

fn check_budget_inputs(b: &BudgetInputs) -> Result<()> {
    if !(b.sigma > 0.0) {
        return Err(invalid("sigma", format!("must be positive, got {}", b.sigma)));
    }
    Ok(())
}

/// AGD iterations for the lower-level solve at in-epoch index `k`
/// (`k = -1` is the epoch initialization from zero).
pub fn budget_agd(k: i64, b: &BudgetInputs) -> Result<usize> {
    check_budget_inputs(b)?;
    if k < -1 {
        return Err(invalid("k", format!("iteration index must be >= -1, got {k}")));
    }
    let sk = b.kappa.sqrt();
    let scale = 2.0 * b.l_tilde * (b.kappa + 1.0).sqrt() / b.sigma;
    let dist = if k == -1 {
        b.c_hat
    } else {
        b.sigma / (2.0 * b.l_tilde) + 2.0 * b.kappa * b.big_b
    };
    Ok(ceil_log_budget(2.0 * sk, scale * dist))
}

/// CG iterations for the linear system at in-epoch index `k >= 0`.
pub fn budget_cg(k: i64, b: &BudgetInputs) -> Result<usize> {
    check_budget_inputs(b)?;
    if k < 0 {
        return Err(invalid("k", format!("CG budgets start at k = 0, got {k}")));
    }
    let sk = b.kappa.sqrt();
    let scale = 4.0 * b.ell * sk / b.sigma;
    let dist = if k == 0 {
        b.v_init_norm + b.m_bound / b.mu
    } else {
        b.sigma / (2.0 * b.ell) + 2.0 * b.m_bound / b.mu
    };
    Ok(ceil_log_budget((sk + 1.0) / 2.0, scale * dist))
}

/// Everything an inner solve needs besides the oracle and warm starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSettings {
    pub mode: InnerMode,
    pub sigma: f64,
    /// AGD step and momentum.
    pub alpha: f64,
    pub beta: f64,
    pub smooth: SmoothnessConstants,
    pub derived: DerivedConstants,
    /// Restart radius, used only by the theory budgets.
    pub big_b: f64,
    /// Override for the epoch-start bound; defaults to `10 (1 + ||y_warm||)`.
    pub c_hat: Option<f64>,
    /// Norm of the first CG warm start; set by the solver.
    pub v_init_norm: f64,
    /// Hard cap on iterations of one adaptive AGD or CG call.
    pub max_inner_iters: usize,
    /// Adaptive tolerances are never set below this; double precision
    /// cannot certify much smaller gradient norms on unit-scale problems.
    pub tol_floor: f64,
}

pub const DEFAULT_MAX_INNER_ITERS: usize = 1_000_000;
pub const DEFAULT_TOL_FLOOR: f64 = 1e-13;

impl InnerSettings {
    /// Adaptive settings with the textbook AGD parameters `1/ell` and
    /// `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)`.
    pub fn adaptive(smooth: SmoothnessConstants, derived: DerivedConstants, sigma: f64) -> Self {
        let sk = smooth.kappa().sqrt();
        Self {
            mode: InnerMode::Adaptive,
            sigma,
            alpha: 1.0 / smooth.ell,
            beta: (sk - 1.0) / (sk + 1.0),
            smooth,
            derived,
            big_b: 1.0,
            c_hat: None,
            v_init_norm: 0.0,
            max_inner_iters: DEFAULT_MAX_INNER_ITERS,
            tol_floor: DEFAULT_TOL_FLOOR,
        }
    }

    pub fn budget_inputs(&self, y_warm: &Vector) -> BudgetInputs {
        BudgetInputs {
            sigma: self.sigma,
            kappa: self.derived.kappa,
            l_tilde: self.derived.l_tilde,
            ell: self.smooth.ell,
            mu: self.smooth.mu,
            m_bound: self.smooth.m_bound,
            big_b: self.big_b,
            c_hat: self.c_hat.unwrap_or_else(|| 10.0 * (1.0 + y_warm.norm())),
            v_init_norm: self.v_init_norm,
        }
    }

    /// Gradient-norm target certifying `||y - y*|| <= sigma / (2 L~)`.
    pub fn y_tolerance(&self) -> f64 {
        (self.smooth.mu * self.sigma / (2.0 * self.derived.l_tilde)).max(self.tol_floor)
    }

    /// Residual target certifying `||v - v*|| <= sigma / (2 ell)`.
    pub fn v_tolerance(&self) -> f64 {
        (self.smooth.mu * self.sigma / (2.0 * self.smooth.ell)).max(self.tol_floor)
    }

    /// AGD parameters for lower-level index `k`.
    pub fn agd_params(&self, k: i64, y_warm: &Vector) -> Result<AgdParams> {
        match self.mode {
            InnerMode::Theory => {
                let t = budget_agd(k, &self.budget_inputs(y_warm))?;
                AgdParams::new(self.alpha, self.beta, t)
            }
            InnerMode::Adaptive => AgdParams::new(self.alpha, self.beta, self.max_inner_iters)?
                .with_tol(self.y_tolerance()),
        }
    }

    fn cg_params(&self, k: i64, y_warm: &Vector) -> Result<CgParams> {
        match self.mode {
            InnerMode::Theory => Ok(CgParams::fixed(budget_cg(k, &self.budget_inputs(y_warm))?)),
            InnerMode::Adaptive => CgParams::adaptive(self.max_inner_iters, self.v_tolerance()),
        }
    }
}

/// Result of one warm-started inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub y: Vector,
    pub v: Vector,
    /// `grad_y f(w, y)`, the CG right-hand side.
    pub grad_f_y: Vector,
    pub agd_grad_calls: usize,
    pub cg_matvecs: usize,
}

impl InnerSolution {
    pub fn next_state(&self) -> InnerState {
        InnerState {
            y_warm: self.y.clone(),
            v_warm: self.v.clone(),
        }
    }
}

/// Lower-level solve `y ~ argmin_y g(x, y)` started from `y0`.
pub fn solve_lower(
    oracle: &BilevelOracle<'_>,
    x: &Vector,
    y0: &Vector,
    k: i64,
    settings: &InnerSettings,
    y_hint: &Vector,
) -> Result<(Vector, usize)> {
    let params = settings.agd_params(k, y_hint)?;
    let out = agd(|y| oracle.grad_g_y(x, y), y0, &params)?;
    if !out.converged {
        return Err(Error::NonConvergence {
            routine: "lower-level AGD",
            tol: params.tol.unwrap_or(0.0),
            cap: params.t_max,
        });
    }
    Ok((out.z, out.iters))
}

/// Warm-started AGD for `y` followed by warm-started CG for `v` at the
/// extrapolated point `w` and in-epoch index `k >= 0`.
pub fn inner_solve(
    oracle: &BilevelOracle<'_>,
    w: &Vector,
    state: &InnerState,
    k: i64,
    settings: &InnerSettings,
) -> Result<InnerSolution> {
    if !(settings.sigma > 0.0) {
        return Err(invalid("sigma", format!("must be positive, got {}", settings.sigma)));
    }
    let (y, agd_grad_calls) = solve_lower(oracle, w, &state.y_warm, k, settings, &state.y_warm)?;

    let rhs = oracle.grad_f_y(w, &y);
    let params = settings.cg_params(k, &state.y_warm)?;
    let out = cg(|v| oracle.hvp_g_yy(w, &y, v), &rhs, &state.v_warm, &params)?;
    if !out.converged {
        return Err(Error::NonConvergence {
            routine: "CG",
            tol: params.tol.unwrap_or(0.0),
            cap: params.t_max,
        });
    }
    Ok(InnerSolution {
        y,
        v: out.q,
        grad_f_y: rhs,
        agd_grad_calls,
        cg_matvecs: out.matvecs,
    })
}

/// `u = grad_x f(w, y) - J_xy g(w, y) v`: one `gc_f` and one `jv_g`.
pub fn inexact_hypergradient(oracle: &BilevelOracle<'_>, w: &Vector, y: &Vector, v: &Vector) -> Vector {
    let mut u = oracle.grad_f_x(w, y);
    let jv = oracle.jvp_g_xy(w, y, v);
    u.add_scaled(-1.0, &jv);
    u
}

/// Hypergradient within `tol` of the true one, computed from cold starts.
///
/// Verification plumbing: solvers never call this.
pub fn exact_hypergradient(oracle: &BilevelOracle<'_>, x: &Vector, tol: f64) -> Result<Vector> {
    let smooth = oracle.constants();
    let derived = derive_constants(&smooth)?;
    let settings = InnerSettings::adaptive(smooth, derived, tol);
    let sol = inner_solve(oracle, x, &InnerState::zeros(oracle.dim_y()), 0, &settings)?;
    Ok(inexact_hypergradient(oracle, x, &sol.y, &sol.v))
}

/// `Phi(x) = f(x, y*(x))` with `y*` resolved to lower-level gradient norm
/// `tol`. Returns `None` if the problem has no `value_f`.
pub fn value_function(oracle: &BilevelOracle<'_>, x: &Vector, tol: f64) -> Result<Option<f64>> {
    let smooth = oracle.constants();
    let params = AgdParams::for_strongly_convex(smooth.ell, smooth.mu, DEFAULT_MAX_INNER_ITERS)?.with_tol(tol)?;
    let out = agd(|y| oracle.grad_g_y(x, y), &Vector::zeros(oracle.dim_y()), &params)?;
    if !out.converged {
        return Err(Error::NonConvergence {
            routine: "lower-level AGD",
            tol,
            cap: params.t_max,
        });
    }
    Ok(oracle.value_f(x, &out.z))
}
