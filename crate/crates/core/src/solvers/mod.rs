//! Outer loops: RAHGD, its perturbed variant PRAHGD, the minimax
//! specialization PRAGDA, and non-accelerated baselines.

mod baselines;
pub mod config;
mod engine;
mod report;

use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use baselines::{baseline_gda, baseline_gda_observed, baseline_hgd, baseline_hgd_observed};
pub use config::{default_config_fosp, default_config_sosp, SolverConfig, DEFAULT_MAX_EPOCHS};
pub use engine::{restart_triggered, select_k0, SolverState};
pub use report::{IterationView, RunReport, Termination, TraceRecord};

use crate::constants::SmoothnessConstants;
use crate::error::{invalid, Error, Result};
use crate::hypergrad::{inexact_hypergradient, inner_solve, solve_lower, InnerSettings, InnerState};
use crate::oracle::{BilevelOracle, MinimaxOracle, OracleCounters};
use crate::subroutines::agd;
use crate::vector::Vector;
use engine::{run_restarted, Direction};

/// Uniform sample from the closed Euclidean ball of radius `r` in `R^d`.
pub fn sample_ball(d: usize, r: f64, rng: &mut impl Rng) -> Vector {
    assert!(d >= 1, "dimension must be positive");
    assert!(r.is_finite() && r >= 0.0, "radius must be nonnegative");
    let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let u: f64 = rng.gen();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || r == 0.0 {
        return Vector::zeros(d);
    }
    let scale = r * u.powf(1.0 / d as f64) / norm;
    Vector::from_fn(d, |i| g[i] * scale)
}

pub(crate) fn inner_settings(cfg: &SolverConfig, smooth: SmoothnessConstants) -> InnerSettings {
    InnerSettings {
        mode: cfg.mode,
        sigma: cfg.sigma,
        alpha: cfg.alpha,
        beta: cfg.beta,
        smooth,
        derived: cfg.constants,
        big_b: cfg.big_b,
        c_hat: cfg.c_hat,
        v_init_norm: 0.0,
        max_inner_iters: cfg.max_inner_iters,
        tol_floor: cfg.inner_tol_floor,
    }
}

struct BilevelDirection<'a, 'p> {
    oracle: &'a BilevelOracle<'p>,
    settings: InnerSettings,
    state: InnerState,
}

impl Direction for BilevelDirection<'_, '_> {
    fn dim_x(&self) -> usize {
        self.oracle.dim_x()
    }

    fn restart(&mut self, x: &Vector, first: bool) -> Result<()> {
        let zero = Vector::zeros(self.oracle.dim_y());
        let (y, _) = solve_lower(self.oracle, x, &zero, -1, &self.settings, &self.state.y_warm)?;
        if first {
            self.settings.v_init_norm = y.norm();
            self.state.v_warm = y.clone();
        }
        self.state.y_warm = y;
        Ok(())
    }

    fn direction(&mut self, w: &Vector, k: usize) -> Result<Vector> {
        let sol = inner_solve(self.oracle, w, &self.state, k as i64, &self.settings)?;
        let u = inexact_hypergradient(self.oracle, w, &sol.y, &sol.v);
        self.state = sol.next_state();
        Ok(u)
    }

    fn counters(&self) -> OracleCounters {
        self.oracle.counters()
    }
}

struct MinimaxDirection<'a, 'p> {
    oracle: &'a MinimaxOracle<'p>,
    settings: InnerSettings,
    y: Vector,
}

impl MinimaxDirection<'_, '_> {
    fn solve_max(&self, x: &Vector, y0: &Vector, k: i64) -> Result<Vector> {
        let params = self.settings.agd_params(k, &self.y)?;
        let out = agd(|y| -&self.oracle.grad_fbar_y(x, y), y0, &params)?;
        if !out.converged {
            return Err(Error::NonConvergence {
                routine: "inner maximization",
                tol: params.tol.unwrap_or(0.0),
                cap: params.t_max,
            });
        }
        Ok(out.z)
    }
}

impl Direction for MinimaxDirection<'_, '_> {
    fn dim_x(&self) -> usize {
        self.oracle.dim_x()
    }

    fn restart(&mut self, x: &Vector, _first: bool) -> Result<()> {
        self.y = self.solve_max(x, &Vector::zeros(self.oracle.dim_y()), -1)?;
        Ok(())
    }

    fn direction(&mut self, w: &Vector, k: usize) -> Result<Vector> {
        self.y = self.solve_max(w, &self.y, k as i64)?;
        Ok(self.oracle.grad_fbar_x(w, &self.y))
    }

    fn counters(&self) -> OracleCounters {
        self.oracle.counters()
    }
}

fn run_bilevel(
    oracle: &BilevelOracle<'_>,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    let mut dir = BilevelDirection {
        oracle,
        settings: inner_settings(cfg, oracle.constants()),
        state: InnerState::zeros(oracle.dim_y()),
    };
    let mut report = run_restarted(&mut dir, x0, cfg, observer)?;
    report.y_last = Some(dir.state.y_warm);
    Ok(report)
}

/// Restarted accelerated hypergradient descent. Requires
/// `cfg.perturbation == false`.
pub fn rahgd(oracle: &BilevelOracle<'_>, x0: &Vector, cfg: &SolverConfig) -> Result<RunReport> {
    rahgd_observed(oracle, x0, cfg, &mut |_| ControlFlow::Continue(()))
}

pub fn rahgd_observed(
    oracle: &BilevelOracle<'_>,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    if cfg.perturbation {
        return Err(invalid("perturbation", "rahgd runs without perturbation; use prahgd"));
    }
    run_bilevel(oracle, x0, cfg, observer)
}

/// Perturbed RAHGD: each restart point is shifted by a uniform draw from the
/// radius-`r` ball. Requires `cfg.perturbation == true`.
pub fn prahgd(oracle: &BilevelOracle<'_>, x0: &Vector, cfg: &SolverConfig) -> Result<RunReport> {
    prahgd_observed(oracle, x0, cfg, &mut |_| ControlFlow::Continue(()))
}

pub fn prahgd_observed(
    oracle: &BilevelOracle<'_>,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    if !cfg.perturbation {
        return Err(invalid("perturbation", "prahgd requires perturbation; use rahgd"));
    }
    run_bilevel(oracle, x0, cfg, observer)
}

/// Perturbed restarted accelerated gradient descent ascent for
/// `min_x max_y fbar(x, y)`. Perturbation follows `cfg.perturbation`.
pub fn pragda(oracle: &MinimaxOracle<'_>, x0: &Vector, cfg: &SolverConfig) -> Result<RunReport> {
    pragda_observed(oracle, x0, cfg, &mut |_| ControlFlow::Continue(()))
}

pub fn pragda_observed(
    oracle: &MinimaxOracle<'_>,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    let mut dir = MinimaxDirection {
        oracle,
        settings: inner_settings(cfg, oracle.constants()),
        y: Vector::zeros(oracle.dim_y()),
    };
    let mut report = run_restarted(&mut dir, x0, cfg, observer)?;
    report.y_last = Some(dir.y);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_radius_ball_is_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_ball(4, 0.0, &mut rng), Vector::zeros(4));
    }

    #[test]
    fn ball_radial_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let (mut radial, mut coord) = (0.0, [0.0; 3]);
        for _ in 0..n {
            let xi = sample_ball(3, 2.0, &mut rng);
            assert!(xi.norm() <= 2.0);
            radial += xi.norm() / 2.0;
            for j in 0..3 {
                coord[j] += xi[j];
            }
        }
        assert!((radial / n as f64 - 0.75).abs() < 0.01);
        // per-coordinate std of the uniform 3-ball of radius 2 is 2/sqrt(5)
        let band = 3.0 * (2.0 / 5f64.sqrt()) / (n as f64).sqrt();
        for c in coord {
            assert!((c / n as f64).abs() < band);
        }
    }
}
