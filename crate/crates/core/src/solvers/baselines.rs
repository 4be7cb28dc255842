//! Non-accelerated comparators: hypergradient descent and simultaneous GDA.

use std::ops::ControlFlow;

use super::report::{IterationView, RunReport, Termination, TraceRecord};
use crate::constants::derive_constants;
use crate::error::{invalid, Error, Result};
use crate::hypergrad::{inexact_hypergradient, inner_solve, InnerSettings, InnerState};
use crate::oracle::{BilevelOracle, MinimaxOracle};
use crate::vector::{axpy, Vector};

fn check_start(x0: &Vector, dim: usize, step: f64, name: &'static str) -> Result<()> {
    if x0.len() != dim {
        return Err(invalid("x0", format!("expected dimension {dim}, got {}", x0.len())));
    }
    if !(step.is_finite() && step >= 0.0) {
        return Err(invalid(name, format!("must be nonnegative, got {step}")));
    }
    Ok(())
}

fn report(x: Vector, trace: Vec<TraceRecord>, termination: Termination, y: Option<Vector>, x0: &Vector) -> RunReport {
    RunReport {
        w_hat: x.clone(),
        epochs: 1,
        total_outer_iters: trace.len(),
        counters: trace.last().map(|r| r.counters).unwrap_or_default(),
        trace,
        termination,
        perturbations: Vec::new(),
        epoch_starts: vec![x0.clone()],
        k0: None,
        x_last: x,
        y_last: y,
    }
}

/// `x <- x - step * u(x)` with warm-started adaptive inner solves at
/// accuracy `sigma`.
pub fn baseline_hgd(oracle: &BilevelOracle<'_>, x0: &Vector, step: f64, sigma: f64, iters: usize) -> Result<RunReport> {
    baseline_hgd_observed(oracle, x0, step, sigma, iters, &mut |_| ControlFlow::Continue(()))
}

pub fn baseline_hgd_observed(
    oracle: &BilevelOracle<'_>,
    x0: &Vector,
    step: f64,
    sigma: f64,
    iters: usize,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    check_start(x0, oracle.dim_x(), step, "step")?;
    let smooth = oracle.constants();
    let settings = InnerSettings::adaptive(smooth, derive_constants(&smooth)?, sigma);
    let mut state = InnerState::zeros(oracle.dim_y());
    let mut x = x0.clone();
    let mut trace = Vec::with_capacity(iters);
    for k in 0..iters {
        let sol = inner_solve(oracle, &x, &state, k as i64, &settings)?;
        let u = inexact_hypergradient(oracle, &x, &sol.y, &sol.v);
        state = sol.next_state();
        let x_next = axpy(-step, &u, &x);
        if !x_next.is_finite() {
            return Err(Error::Divergence {
                routine: "baseline_hgd",
                iteration: k,
            });
        }
        let record = TraceRecord {
            epoch: 0,
            iter: k,
            hypergrad_norm: u.norm(),
            step_norm: x_next.distance(&x),
            counters: oracle.counters(),
        };
        trace.push(record);
        let flow = observer(&IterationView {
            record: &record,
            w: &x,
            x_next: &x_next,
            epoch_start: x0,
            restart: false,
        });
        if flow.is_break() {
            return Ok(report(x, trace, Termination::StoppedByObserver, Some(state.y_warm), x0));
        }
        x = x_next;
    }
    Ok(report(x, trace, Termination::IterationBudget, Some(state.y_warm), x0))
}

/// Simultaneous `x <- x - step_x grad_x fbar`, `y <- y + step_y grad_y fbar`.
pub fn baseline_gda(
    oracle: &MinimaxOracle<'_>,
    x0: &Vector,
    y0: &Vector,
    step_x: f64,
    step_y: f64,
    iters: usize,
) -> Result<RunReport> {
    baseline_gda_observed(oracle, x0, y0, step_x, step_y, iters, &mut |_| ControlFlow::Continue(()))
}

pub fn baseline_gda_observed(
    oracle: &MinimaxOracle<'_>,
    x0: &Vector,
    y0: &Vector,
    step_x: f64,
    step_y: f64,
    iters: usize,
    observer: &mut dyn FnMut(&IterationView<'_>) -> ControlFlow<()>,
) -> Result<RunReport> {
    check_start(x0, oracle.dim_x(), step_x, "step_x")?;
    if y0.len() != oracle.dim_y() {
        return Err(invalid("y0", format!("expected dimension {}, got {}", oracle.dim_y(), y0.len())));
    }
    if !(step_y.is_finite() && step_y >= 0.0) {
        return Err(invalid("step_y", format!("must be nonnegative, got {step_y}")));
    }
    let (mut x, mut y) = (x0.clone(), y0.clone());
    let mut trace = Vec::with_capacity(iters);
    for k in 0..iters {
        let gx = oracle.grad_fbar_x(&x, &y);
        let gy = oracle.grad_fbar_y(&x, &y);
        let x_next = axpy(-step_x, &gx, &x);
        let y_next = axpy(step_y, &gy, &y);
        if !x_next.is_finite() || !y_next.is_finite() {
            return Err(Error::Divergence {
                routine: "baseline_gda",
                iteration: k,
            });
        }
        let record = TraceRecord {
            epoch: 0,
            iter: k,
            hypergrad_norm: gx.norm(),
            step_norm: x_next.distance(&x),
            counters: oracle.counters(),
        };
        trace.push(record);
        let flow = observer(&IterationView {
            record: &record,
            w: &x,
            x_next: &x_next,
            epoch_start: x0,
            restart: false,
        });
        if flow.is_break() {
            return Ok(report(x, trace, Termination::StoppedByObserver, Some(y), x0));
        }
        x = x_next;
        y = y_next;
    }
    Ok(report(x, trace, Termination::IterationBudget, Some(y), x0))
}
