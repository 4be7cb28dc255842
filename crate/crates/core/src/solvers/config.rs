//! Solver configuration and the default parameter schedules.

use crate::constants::{DerivedConstants, SmoothnessConstants};
use crate::error::{invalid, Result};
use crate::hypergrad::{InnerMode, DEFAULT_MAX_INNER_ITERS, DEFAULT_TOL_FLOOR};

/// Epoch cap used when no suboptimality guess is supplied.
pub const DEFAULT_MAX_EPOCHS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub eta: f64,
    /// Momentum parameter; 1 disables extrapolation.
    pub theta: f64,
    pub big_b: f64,
    pub big_k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub perturbation: bool,
    pub r: f64,
    pub zeta: f64,
    pub chi: f64,
    pub c_const: f64,
    pub max_epochs: usize,
    pub mode: InnerMode,
    pub seed: u64,
    pub constants: DerivedConstants,
    /// Bound on `||y*||` at epoch starts for theory budgets.
    pub c_hat: Option<f64>,
    pub max_inner_iters: usize,
    pub inner_tol_floor: f64,
    /// Optional guess of `Phi(x0) - inf Phi`, used only for `max_epochs`.
    pub delta_hat: Option<f64>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        positive("epsilon", self.epsilon)?;
        positive("eta", self.eta)?;
        positive("big_b", self.big_b)?;
        positive("sigma", self.sigma)?;
        positive("alpha", self.alpha)?;
        positive("c_const", self.c_const)?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(invalid("theta", format!("must lie in (0, 1], got {}", self.theta)));
        }
        if self.big_k == 0 {
            return Err(invalid("big_k", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("must lie in [0, 1), got {}", self.beta)));
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(invalid("r", format!("must be nonnegative, got {}", self.r)));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(invalid("zeta", format!("must lie in (0, 1), got {}", self.zeta)));
        }
        if self.max_epochs == 0 {
            return Err(invalid("max_epochs", "must be at least 1"));
        }
        if self.max_inner_iters == 0 {
            return Err(invalid("max_inner_iters", "must be at least 1"));
        }
        positive("inner_tol_floor", self.inner_tol_floor)?;
        Ok(())
    }

    /// Sets `delta_hat` and the epoch cap `ceil(10 delta_hat sqrt(rho~) eps^{-3/2})`.
    pub fn with_delta_hat(mut self, delta_hat: f64) -> Result<Self> {
        positive("delta_hat", delta_hat)?;
        let cap = 10.0 * delta_hat * self.constants.rho_tilde.sqrt() * self.epsilon.powf(-1.5);
        self.delta_hat = Some(delta_hat);
        self.max_epochs = (cap.ceil() as usize).max(1);
        Ok(self)
    }
}

fn check_common(dc: &DerivedConstants, sc: &SmoothnessConstants, epsilon: f64) -> Result<()> {
    sc.validate()?;
    positive("epsilon", epsilon)?;
    if dc.rho_tilde == 0.0 {
        return Err(invalid(
            "rho_tilde",
            "is zero (quadratic hyperobjective); apply DerivedConstants::with_rho_tilde_floor with a floor >= 1e-12",
        ));
    }
    positive("rho_tilde", dc.rho_tilde)?;
    positive("l_tilde", dc.l_tilde)?;
    let cap = dc.l_tilde * dc.l_tilde / dc.rho_tilde;
    if epsilon > cap {
        return Err(invalid("epsilon", format!("must not exceed L~^2 / rho~ = {cap}")));
    }
    Ok(())
}

fn agd_pair(sc: &SmoothnessConstants) -> (f64, f64) {
    let sk = sc.kappa().sqrt();
    (1.0 / sc.ell, (sk - 1.0) / (sk + 1.0))
}

/// Schedule for an `epsilon`-first-order stationary point.
pub fn default_config_fosp(dc: DerivedConstants, sc: SmoothnessConstants, epsilon: f64) -> Result<SolverConfig> {
    check_common(&dc, &sc, epsilon)?;
    let eta = 1.0 / (4.0 * dc.l_tilde);
    let theta = (4.0 * (dc.rho_tilde * epsilon * eta * eta).powf(0.25)).min(1.0);
    let (alpha, beta) = agd_pair(&sc);
    Ok(SolverConfig {
        epsilon,
        eta,
        theta,
        big_b: (epsilon / dc.rho_tilde).sqrt(),
        big_k: (1.0 / theta).ceil() as usize,
        alpha,
        beta,
        sigma: epsilon * epsilon,
        perturbation: false,
        r: 0.0,
        zeta: 0.1,
        chi: 1.0,
        c_const: 1.0,
        max_epochs: DEFAULT_MAX_EPOCHS,
        mode: InnerMode::Adaptive,
        seed: 0,
        constants: dc,
        c_hat: None,
        max_inner_iters: DEFAULT_MAX_INNER_ITERS,
        inner_tol_floor: DEFAULT_TOL_FLOOR,
        delta_hat: None,
    })
}

/// Schedule for an `(epsilon, sqrt(rho~ epsilon))`-second-order stationary
/// point with failure probability `zeta`.
pub fn default_config_sosp(
    dc: DerivedConstants,
    sc: SmoothnessConstants,
    epsilon: f64,
    zeta: f64,
    d_x: usize,
) -> Result<SolverConfig> {
    check_common(&dc, &sc, epsilon)?;
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(invalid("zeta", format!("must lie in (0, 1), got {zeta}")));
    }
    if d_x == 0 {
        return Err(invalid("d_x", "must be at least 1"));
    }
    let c_const = 1.0;
    let dxf = d_x as f64;
    let chi = (dxf / (zeta * epsilon)).ln().ceil().max(1.0);
    let eta = 1.0 / (4.0 * dc.l_tilde);
    let theta = 0.5 * (dc.rho_tilde * epsilon * eta * eta).powf(0.25);
    let big_k = (2.0 * chi / theta).ceil() as usize;
    let kf = big_k as f64;
    let big_b = (epsilon / dc.rho_tilde).sqrt() / (288.0 * chi * chi);
    let r = (dc.l_tilde * big_b * big_b / (4.0 * c_const))
        .min((big_b + big_b * big_b) / std::f64::consts::SQRT_2)
        .min(theta * big_b / (20.0 * kf))
        .min((theta * big_b * big_b / (2.0 * kf)).sqrt());
    let sigma = (dc.rho_tilde * big_b * zeta * r * theta / (2.0 * dxf.sqrt())).min(epsilon * epsilon);
    let (alpha, beta) = agd_pair(&sc);
    Ok(SolverConfig {
        epsilon,
        eta,
        theta,
        big_b,
        big_k,
        alpha,
        beta,
        sigma,
        perturbation: true,
        r,
        zeta,
        chi,
        c_const,
        max_epochs: DEFAULT_MAX_EPOCHS,
        mode: InnerMode::Adaptive,
        seed: 0,
        constants: dc,
        c_hat: None,
        max_inner_iters: DEFAULT_MAX_INNER_ITERS,
        inner_tol_floor: DEFAULT_TOL_FLOOR,
        delta_hat: None,
    })
}
