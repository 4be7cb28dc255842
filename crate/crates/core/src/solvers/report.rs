//! Run reports and per-iteration records.

use crate::oracle::OracleCounters;
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    /// In-epoch index `k` of the update that produced this record.
    pub iter: usize,
    /// `||u_{t,k}||`.
    pub hypergrad_norm: f64,
    /// `||x_{t,k+1} - x_{t,k}||`.
    pub step_norm: f64,
    /// Cumulative counters after the iteration.
    pub counters: OracleCounters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// An epoch reached `K` iterations without restarting.
    EpochCompleted,
    MaxEpochsHit,
    /// A fixed-iteration baseline ran its full budget.
    IterationBudget,
    StoppedByObserver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Averaged output for completed runs; the last extrapolated point when
    /// stopped by an observer; the final iterate for baselines.
    pub w_hat: Vector,
    pub epochs: usize,
    pub total_outer_iters: usize,
    pub counters: OracleCounters,
    pub trace: Vec<TraceRecord>,
    pub termination: Termination,
    /// `(epoch started, ||xi||)` for each perturbed restart.
    pub perturbations: Vec<(usize, f64)>,
    /// `x_{t,0}` for every epoch.
    pub epoch_starts: Vec<Vector>,
    pub k0: Option<usize>,
    pub x_last: Vector,
    /// Final lower-level iterate, reported by the minimax baseline.
    pub y_last: Option<Vector>,
}

/// What an observer sees after each outer iteration.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub record: &'a TraceRecord,
    pub w: &'a Vector,
    pub x_next: &'a Vector,
    pub epoch_start: &'a Vector,
    /// Whether this iteration fires the restart test.
    pub restart: bool,
}
