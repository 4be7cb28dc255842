//! Post-run stationarity checks on the value function.

use rahgd_core::vector::axpy;
use rahgd_core::{exact_hypergradient, BilevelOracle, BilevelProblem, DerivedConstants, OracleCounters, Result, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Hypergradients inside the Hessian finite differences are resolved to
/// this accuracy; errors of order `tol / h` would otherwise swamp the
/// difference quotient.
const HESSIAN_GRAD_TOL: f64 = 1e-11;

/// SOSP threshold factor on `sqrt(rho~ epsilon)`.
pub const SOSP_FACTOR: f64 = 1.011;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub min_iters: usize,
    pub max_iters: usize,
    /// Stop once `||H v - lambda v|| <= residual_tol`.
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            min_iters: 200,
            max_iters: 20_000,
            residual_tol: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub grad_norm: f64,
    /// Accuracy of the hypergradient behind `grad_norm`.
    pub grad_tol: f64,
    pub lambda_min_est: f64,
    pub eig_iters: usize,
    pub eig_residual: f64,
    pub eig_converged: bool,
    /// Step of the central differences.
    pub fd_step: f64,
    pub fosp_pass: bool,
    pub sosp_pass: bool,
    /// Oracle calls spent by the verifier alone.
    pub counters: OracleCounters,
}

/// `-1.011 sqrt(rho~ epsilon)`.
pub fn sosp_threshold(dc: &DerivedConstants, epsilon: f64) -> f64 {
    -SOSP_FACTOR * (dc.rho_tilde * epsilon).sqrt()
}

pub fn verify_stationarity(
    problem: &dyn BilevelProblem,
    x: &Vector,
    dc: &DerivedConstants,
    epsilon: f64,
) -> Result<StationarityReport> {
    verify_stationarity_with(problem, x, dc, epsilon, &EigenOptions::default())
}

/// Gradient norm from a certified hypergradient, and the smallest Hessian
/// eigenvalue from shifted power iteration on central differences of the
/// hypergradient. Uses its own oracle, so solver counters are untouched.
pub fn verify_stationarity_with(
    problem: &dyn BilevelProblem,
    x: &Vector,
    dc: &DerivedConstants,
    epsilon: f64,
    opts: &EigenOptions,
) -> Result<StationarityReport> {
    let oracle = BilevelOracle::new(problem);
    let grad_tol = epsilon / 100.0;
    let grad_norm = exact_hypergradient(&oracle, x, grad_tol)?.norm();

    let h = 1e-4 * (1.0 + x.norm());
    let hess = |v: &Vector| -> Result<Vector> {
        let plus = exact_hypergradient(&oracle, &axpy(h, v, x), HESSIAN_GRAD_TOL)?;
        let minus = exact_hypergradient(&oracle, &axpy(-h, v, x), HESSIAN_GRAD_TOL)?;
        let mut d = &plus - &minus;
        d.scale(1.0 / (2.0 * h));
        Ok(d)
    };

    let shift = dc.l_tilde;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = Vector::from_fn(x.len(), |_| StandardNormal.sample(&mut rng));
    v.scale(1.0 / v.norm());
    let (mut lambda, mut residual, mut iters, mut converged) = (f64::NAN, f64::INFINITY, 0, false);
    while iters < opts.max_iters {
        let hv = hess(&v)?;
        iters += 1;
        lambda = v.dot(&hv);
        residual = axpy(-lambda, &v, &hv).norm();
        if iters >= opts.min_iters && residual <= opts.residual_tol {
            converged = true;
            break;
        }
        // (shift I - H) v
        let mut next = v.scaled(shift);
        next.add_scaled(-1.0, &hv);
        let n = next.norm();
        if !(n > 0.0) {
            converged = residual <= opts.residual_tol;
            break;
        }
        next.scale(1.0 / n);
        v = next;
    }

    Ok(StationarityReport {
        grad_norm,
        grad_tol,
        lambda_min_est: lambda,
        eig_iters: iters,
        eig_residual: residual,
        eig_converged: converged,
        fd_step: h,
        fosp_pass: grad_norm <= epsilon,
        sosp_pass: grad_norm <= epsilon && lambda >= sosp_threshold(dc, epsilon),
        counters: oracle.counters(),
    })
}
