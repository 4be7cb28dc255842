//! Problem smoothness constants and the Lipschitz constants of the
//! value function they imply.

use crate::error::{Error, Result};

/// User-declared smoothness constants of a bilevel or minimax problem.
///
/// * `ell`: gradient-Lipschitz constant of `f` and `g`
/// * `mu`: strong-convexity modulus of `g(x, .)`
/// * `rho`: Lipschitz constant of the second derivatives
/// * `m_bound`: Lipschitz constant of `f`
/// * `nu`: Lipschitz constant of the third derivatives of `g`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants {
    pub ell: f64,
    pub mu: f64,
    pub rho: f64,
    pub m_bound: f64,
    pub nu: f64,
}

impl SmoothnessConstants {
    pub fn new(ell: f64, mu: f64, rho: f64, m_bound: f64, nu: f64) -> Result<Self> {
        let c = Self {
            ell,
            mu,
            rho,
            m_bound,
            nu,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.ell, self.mu, self.rho, self.m_bound, self.nu];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Constants(format!(
                "all constants must be finite and nonnegative, got {self:?}"
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::Constants(format!("mu = {} must be positive", self.mu)));
        }
        if self.ell < self.mu {
            return Err(Error::Constants(format!(
                "ell = {} is smaller than mu = {}",
                self.ell, self.mu
            )));
        }
        Ok(())
    }

    /// Condition number `ell / mu` of the lower-level problem.
    pub fn kappa(&self) -> f64 {
        self.ell / self.mu
    }
}

/// Condition number together with the gradient- and Hessian-Lipschitz
/// constants of the value function `Phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub kappa: f64,
    pub l_tilde: f64,
    pub rho_tilde: f64,
}

impl DerivedConstants {
    /// Raises `rho_tilde` to at least `floor`.
    ///
    /// Needed for problems whose value function is exactly quadratic, where
    /// the restart radius and momentum schedule are undefined at zero.
    pub fn with_rho_tilde_floor(mut self, floor: f64) -> Self {
        self.rho_tilde = self.rho_tilde.max(floor);
        self
    }
}

/// Constants of `Phi(x) = f(x, y*(x))` for a nonconvex-strongly-convex
/// bilevel problem.
pub fn derive_constants(c: &SmoothnessConstants) -> Result<DerivedConstants> {
    c.validate()?;
    let SmoothnessConstants {
        ell: l,
        mu,
        rho,
        m_bound: m,
        nu,
    } = *c;
    let kappa = l / mu;
    let mu2 = mu * mu;
    let mu3 = mu2 * mu;

    let l_tilde = l
        + (2.0 * l * l + rho * m) / mu
        + (l * l * l + 2.0 * rho * l * m) / mu2
        + rho * l * l * m / mu3;

    let k1 = 1.0 + kappa;
    let first = rho
        + (2.0 * l * rho + m * nu) / mu
        + (2.0 * m * l * nu + rho * l * l) / mu2
        + m * l * l * nu / mu3;
    let second = 2.0 * l * rho / mu
        + (4.0 * m * rho * rho + 2.0 * l * l * rho) / mu2
        + 2.0 * m * l * rho * rho / mu3;
    let third = m * rho * rho / mu2 + rho * l / mu;
    let rho_tilde = first * k1 + second * k1 * k1 + third * k1 * k1 * k1;

    Ok(DerivedConstants {
        kappa,
        l_tilde,
        rho_tilde,
    })
}

/// Constants of `Phi(x) = max_y fbar(x, y)` for a nonconvex-strongly-concave
/// minimax problem: `(kappa + 1) ell` and `4 sqrt(2) kappa^3 rho`.
pub fn derive_minimax_constants(c: &SmoothnessConstants) -> Result<DerivedConstants> {
    c.validate()?;
    let kappa = c.kappa();
    Ok(DerivedConstants {
        kappa,
        l_tilde: (kappa + 1.0) * c.ell,
        rho_tilde: 4.0 * std::f64::consts::SQRT_2 * kappa.powi(3) * c.rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(ell: f64, mu: f64, rho: f64, m: f64, nu: f64) -> SmoothnessConstants {
        SmoothnessConstants::new(ell, mu, rho, m, nu).unwrap()
    }

    #[test]
    fn unit_constants() {
        let d = derive_constants(&sc(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(d.kappa, 1.0);
        assert_eq!(d.l_tilde, 4.0);
        assert_eq!(d.rho_tilde, 0.0);
    }

    #[test]
    fn kappa_is_ratio() {
        let d = derive_constants(&sc(10.0, 1.0, 0.5, 0.5, 0.0)).unwrap();
        assert_eq!(d.kappa, 10.0);
    }

    // Reference values from a 50-digit mpmath evaluation of the closed forms.
    #[test]
    fn closed_forms_match_reference() {
        let d = derive_constants(&sc(2.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(d.l_tilde, 27.0);
        assert_eq!(d.rho_tilde, 288.0);
        let d = derive_constants(&sc(2.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(d.rho_tilde, 315.0);
        let d = derive_constants(&sc(3.0, 0.5, 0.2, 2.0, 0.7)).unwrap();
        assert!((d.l_tilde - 186.2).abs() < 1e-12);
        assert!((d.rho_tilde - 2624.44).abs() < 1e-9);
    }

    #[test]
    fn derived_invariants() {
        for &(l, mu, rho, m, nu) in &[
            (1.0, 1.0, 0.0, 0.0, 0.0),
            (5.0, 0.1, 1.0, 2.0, 3.0),
            (20.0, 10.0, 2.0, 0.0, 0.0),
        ] {
            let d = derive_constants(&sc(l, mu, rho, m, nu)).unwrap();
            assert!(d.kappa >= 1.0);
            assert!(d.l_tilde >= l);
            assert!(d.rho_tilde >= 0.0);
        }
    }

    #[test]
    fn minimax_constants() {
        let d = derive_minimax_constants(&sc(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(d.l_tilde, 2.0);
        assert_eq!(d.rho_tilde, 0.0);
        let d = derive_minimax_constants(&sc(20.0, 10.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(d.kappa, 2.0);
        assert_eq!(d.l_tilde, 60.0);
        let d = derive_minimax_constants(&sc(1.0, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert!((d.rho_tilde - 5.656854249492381).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(matches!(
            SmoothnessConstants::new(1.0, 0.0, 0.0, 0.0, 0.0),
            Err(Error::Constants(_))
        ));
        assert!(matches!(
            SmoothnessConstants::new(0.5, 1.0, 0.0, 0.0, 0.0),
            Err(Error::Constants(_))
        ));
        let bad = SmoothnessConstants {
            ell: 1.0,
            mu: -1.0,
            rho: 0.0,
            m_bound: 0.0,
            nu: 0.0,
        };
        assert!(derive_constants(&bad).is_err());
        assert!(derive_minimax_constants(&bad).is_err());
    }

    #[test]
    fn floor_only_raises() {
        let d = derive_constants(&sc(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(d.with_rho_tilde_floor(1e-12).rho_tilde, 1e-12);
        let d = derive_constants(&sc(2.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(d.with_rho_tilde_floor(1.0).rho_tilde, 288.0);
    }
}
