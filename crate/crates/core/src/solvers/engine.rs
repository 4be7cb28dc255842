//! The restarted accelerated outer loop shared by all three methods.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SolverConfig;
use super::report::{IterationView, RunReport, Termination, TraceRecord};
use super::sample_ball;
use crate::error::{invalid, Error, Result};
use crate::oracle::OracleCounters;
use crate::vector::{axpy, Vector};

/// Source of the search direction `u_{t,k}` at an extrapolated point.
pub(crate) trait Direction {
    fn dim_x(&self) -> usize;
    /// Re-solves the lower level from scratch at an epoch start.
    fn restart(&mut self, x: &Vector, first: bool) -> Result<()>;
    fn direction(&mut self, w: &Vector, k: usize) -> Result<Vector>;
    fn counters(&self) -> OracleCounters;
}

/// `k * sum_{i<k} ||x_{i+1} - x_i||^2 > B^2`.
pub fn restart_triggered(k: usize, disp_sq_sum: f64, big_b: f64) -> bool {
    k as f64 * disp_sq_sum > big_b * big_b
}

/// Index in `[floor(len/2), len - 1]` with the smallest displacement; the
/// smallest such index on ties.
pub fn select_k0(displacements: &[f64]) -> usize {
    assert!(!displacements.is_empty(), "need at least one displacement");
    let lo = displacements.len() / 2;
    let mut best = lo;
    for i in lo + 1..displacements.len() {
        if displacements[i] < displacements[best] {
            best = i;
        }
    }
    best
}

/// Iterates of the current epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: usize,
    pub k: usize,
    pub x_start: Vector,
    pub x_prev: Vector,
    pub x_cur: Vector,
    pub disp_sq_sum: f64,
    /// `w_{t,0..k-1}`.
    pub w_history: Vec<Vector>,
    /// `||x_{t,i+1} - x_{t,i}||` for `i < k`.
    pub displacements: Vec<f64>,
}

impl SolverState {
    pub fn new(t: usize, x0: Vector) -> Self {
        Self {
            t,
            k: 0,
            x_start: x0.clone(),
            x_prev: x0.clone(),
            x_cur: x0,
            disp_sq_sum: 0.0,
            w_history: Vec::new(),
            displacements: Vec::new(),
        }
    }

    /// `w = x_k + (1 - theta)(x_k - x_{k-1})`.
    pub fn extrapolate(&self, theta: f64) -> Vector {
        let diff = &self.x_cur - &self.x_prev;
        axpy(1.0 - theta, &diff, &self.x_cur)
    }

    fn advance(&mut self, w: Vector, x_next: Vector) -> f64 {
        let d = x_next.distance(&self.x_cur);
        self.disp_sq_sum += d * d;
        self.displacements.push(d);
        self.w_history.push(w);
        self.x_prev = std::mem::replace(&mut self.x_cur, x_next);
        self.k += 1;
        d
    }

    /// Whether the running sum equals the sum of recorded displacements
    /// accumulated in the same order.
    pub fn is_consistent(&self) -> bool {
        let recomputed = self.displacements.iter().fold(0.0, |acc, d| acc + d * d);
        recomputed == self.disp_sq_sum && self.displacements.len() == self.k && self.w_history.len() == self.k
    }

    /// `(K0, mean of w_0..=w_K0)` over the recorded iterations.
    pub fn averaged_output(&self) -> (usize, Vector) {
        let k0 = select_k0(&self.displacements);
        let mut sum = Vector::zeros(self.x_cur.len());
        for w in &self.w_history[..=k0] {
            sum.add_scaled(1.0, w);
        }
        (k0, sum.scaled(1.0 / (k0 + 1) as f64))
    }
}

pub(crate) type Observer<'o> = dyn FnMut(&IterationView<'_>) -> ControlFlow<()> + 'o;

pub(crate) fn run_restarted<D: Direction>(
    dir: &mut D,
    x0: &Vector,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<RunReport> {
    cfg.validate()?;
    if x0.len() != dir.dim_x() {
        return Err(invalid("x0", format!("expected dimension {}, got {}", dir.dim_x(), x0.len())));
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite { context: "initial point" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dir.restart(x0, true)?;

    let mut state = SolverState::new(0, x0.clone());
    let mut trace = Vec::new();
    let mut perturbations = Vec::new();
    let mut epoch_starts = vec![x0.clone()];

    let (termination, w_hat, k0) = loop {
        let k = state.k;
        let w = state.extrapolate(cfg.theta);
        let u = dir.direction(&w, k)?;
        let x_next = axpy(-cfg.eta, &u, &w);
        if !u.is_finite() || !x_next.is_finite() {
            return Err(Error::Divergence {
                routine: "outer loop",
                iteration: trace.len(),
            });
        }
        let step = state.advance(w.clone(), x_next);
        let restart = restart_triggered(state.k, state.disp_sq_sum, cfg.big_b);
        let record = TraceRecord {
            epoch: state.t,
            iter: k,
            hypergrad_norm: u.norm(),
            step_norm: step,
            counters: dir.counters(),
        };
        trace.push(record);
        let view = IterationView {
            record: &record,
            w: &w,
            x_next: &state.x_cur,
            epoch_start: &state.x_start,
            restart,
        };
        if observer(&view).is_break() {
            break (Termination::StoppedByObserver, w, None);
        }

        if restart {
            if state.t + 1 >= cfg.max_epochs {
                let (k0, w_hat) = state.averaged_output();
                break (Termination::MaxEpochsHit, w_hat, Some(k0));
            }
            let mut x_new = state.x_cur.clone();
            if cfg.perturbation {
                let xi = sample_ball(x_new.len(), cfg.r, &mut rng);
                perturbations.push((state.t + 1, xi.norm()));
                x_new.add_scaled(1.0, &xi);
            }
            dir.restart(&x_new, false)?;
            epoch_starts.push(x_new.clone());
            state = SolverState::new(state.t + 1, x_new);
        } else if state.k == cfg.big_k {
            let (k0, w_hat) = state.averaged_output();
            break (Termination::EpochCompleted, w_hat, Some(k0));
        }
    };

    debug_assert!(state.is_consistent());
    Ok(RunReport {
        w_hat,
        epochs: state.t + 1,
        total_outer_iters: trace.len(),
        counters: dir.counters(),
        trace,
        termination,
        perturbations,
        epoch_starts,
        k0,
        x_last: state.x_cur,
        y_last: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_arithmetic() {
        // displacements (1, 1, 1), B^2 = 2
        let b = 2f64.sqrt();
        assert!(!restart_triggered(1, 1.0, b));
        assert!(restart_triggered(2, 2.0, b));
        assert!(!restart_triggered(1, 2.0, 2.0));
    }

    #[test]
    fn k0_ties_prefer_smallest_index() {
        assert_eq!(select_k0(&[5.0, 4.0, 1.0, 1.0]), 2);
        assert_eq!(select_k0(&[0.0, 3.0, 2.0, 3.0]), 2);
        assert_eq!(select_k0(&[7.0]), 0);
        assert_eq!(select_k0(&[1.0, 1.0, 1.0, 1.0, 1.0]), 2);
    }

    #[test]
    fn state_bookkeeping() {
        let mut s = SolverState::new(0, Vector::from([0.0, 0.0]));
        s.advance(Vector::from([0.0, 0.0]), Vector::from([3.0, 4.0]));
        s.advance(Vector::from([4.0, 4.0]), Vector::from([3.0, 4.0]));
        assert_eq!(s.disp_sq_sum, 25.0);
        assert!(s.is_consistent());
        assert_eq!(s.extrapolate(0.5), Vector::from([3.0, 4.0]));
        let (k0, w) = s.averaged_output();
        assert_eq!(k0, 1);
        assert_eq!(w, Vector::from([2.0, 2.0]));
    }
}
