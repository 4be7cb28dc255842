//! Executes an experiment spec: one solver run per seed, traces and a
//! summary written as CSV.

use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rahgd_core::solvers::{
    baseline_gda_observed, baseline_hgd_observed, default_config_sosp, pragda_observed, prahgd_observed,
    rahgd_observed, IterationView, Termination,
};
use rahgd_core::{
    default_config_fosp, derive_constants, derive_minimax_constants, BilevelOracle, DerivedConstants, Error,
    InnerMode, MinimaxOracle, RunReport, SolverConfig, Vector,
};

use crate::csvfmt::g17;
use crate::spec::{BuiltProblem, ExperimentSpec, SolverKind};
use crate::verify::{verify_stationarity, StationarityReport};
use crate::HarnessError;

pub const TRACE_COLUMNS: [&str; 9] = [
    "epoch",
    "iter",
    "hypergrad_norm",
    "step_norm",
    "gc_f",
    "gc_g",
    "jv_g",
    "hv_g",
    "wall_ms",
];

pub const SUMMARY_COLUMNS: [&str; 22] = [
    "solver",
    "seed",
    "status",
    "termination",
    "epochs",
    "outer_iters",
    "gc_f",
    "gc_g",
    "jv_g",
    "hv_g",
    "grad_norm",
    "grad_tol",
    "lambda_min_est",
    "eig_converged",
    "fosp_pass",
    "sosp_pass",
    "verify_gc_f",
    "verify_gc_g",
    "verify_jv_g",
    "verify_hv_g",
    "wall_ms",
    "w_hat",
];

pub const SUMMARY_FILE: &str = "summary.csv";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    BadInput = 1,
    Diverged = 2,
    WallClock = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    WallClock,
    Failed(String),
}

impl RunStatus {
    fn label(&self) -> String {
        match self {
            Self::Completed => "completed".into(),
            Self::WallClock => "wall_clock".into(),
            Self::Failed(msg) => format!("failed: {}", msg.replace(',', ";")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub status: RunStatus,
    pub report: Option<RunReport>,
    pub stationarity: Option<StationarityReport>,
    pub wall_ms: f64,
    pub trace_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub seeds: Vec<SeedOutcome>,
    pub summary_path: PathBuf,
    pub exit: ExitStatus,
}

/// Command-line adjustments applied on top of a spec file.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub solver: Option<SolverKind>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub verify: bool,
}

impl CliOverrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<(), HarnessError> {
        if let Some(s) = self.solver {
            spec.experiment.solver = s;
        }
        if let Some(e) = self.epsilon {
            spec.experiment.epsilon = e;
        }
        if let Some(s) = self.seed {
            spec.experiment.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            spec.experiment.output = o.clone();
        }
        spec.experiment.verify |= self.verify;
        spec.validate()
    }
}

pub fn trace_file_name(solver: SolverKind, seed: u64) -> String {
    format!("{}_seed{}.csv", solver.name(), seed)
}

/// Derived constants the solver schedules and verifier use.
pub fn derived_for(spec: &ExperimentSpec, problem: &BuiltProblem) -> Result<DerivedConstants, HarnessError> {
    let floor = spec.overrides.rho_tilde_floor.unwrap_or(problem.default_rho_floor());
    let dc = match problem.minimax() {
        Some(mm) if spec.experiment.solver.is_minimax() => derive_minimax_constants(&mm.constants()),
        _ => derive_constants(&problem.bilevel().constants()),
    };
    Ok(dc.map_err(|e| HarnessError::Spec(format!("constants: {e}")))?.with_rho_tilde_floor(floor))
}

/// Schedule for the accelerated solvers after overrides.
pub fn solver_config(
    spec: &ExperimentSpec,
    problem: &BuiltProblem,
    dc: DerivedConstants,
    seed: u64,
) -> Result<SolverConfig, HarnessError> {
    let sc = problem.bilevel().constants();
    let eps = spec.experiment.epsilon;
    let o = &spec.overrides;
    let err = |e: Error| HarnessError::Spec(format!("solver config: {e}"));
    let mut cfg = match spec.experiment.solver {
        SolverKind::Prahgd | SolverKind::Pragda => {
            default_config_sosp(dc, sc, eps, o.zeta.unwrap_or(0.1), problem.bilevel().dim_x()).map_err(err)?
        }
        _ => default_config_fosp(dc, sc, eps).map_err(err)?,
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = o.$field { cfg.$field = v; } )* };
    }
    set!(eta, theta, big_b, big_k, sigma, r, zeta, c_const, max_epochs, max_inner_iters, inner_tol_floor);
    if o.c_hat.is_some() {
        cfg.c_hat = o.c_hat;
    }
    if let Some(m) = &o.mode {
        cfg.mode = if m == "theory" { InnerMode::Theory } else { InnerMode::Adaptive };
    }
    if let Some(d) = o.delta_hat {
        cfg = cfg.with_delta_hat(d).map_err(err)?;
    }
    cfg.seed = seed;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn write_trace(path: &Path, report: &RunReport, wall_ms: &[f64]) -> Result<(), HarnessError> {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for (rec, ms) in report.trace.iter().zip(wall_ms) {
        let c = rec.counters;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rec.epoch,
            rec.iter,
            g17(rec.hypergrad_norm),
            g17(rec.step_norm),
            c.gc_f,
            c.gc_g,
            c.jv_g,
            c.hv_g,
            g17(*ms)
        );
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn run_one(
    spec: &ExperimentSpec,
    problem: &BuiltProblem,
    dc: DerivedConstants,
    x0: &Vector,
    seed: u64,
    started: Instant,
) -> Result<(RunReport, Vec<f64>), Error> {
    let e = &spec.experiment;
    let deadline = e.max_wall_seconds;
    let timing = e.timing;
    let mut wall = Vec::new();
    let mut observer = |_: &IterationView<'_>| {
        let elapsed = started.elapsed().as_secs_f64();
        wall.push(if timing { elapsed * 1e3 } else { 0.0 });
        match deadline {
            Some(d) if elapsed > d => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    };
    let b = &spec.baseline;
    let to_err = |e: HarnessError| Error::InvalidParameter {
        name: "spec",
        reason: e.to_string(),
    };
    let report = match e.solver {
        SolverKind::Rahgd | SolverKind::Prahgd => {
            let cfg = solver_config(spec, problem, dc, seed).map_err(to_err)?;
            let o = BilevelOracle::new(problem.bilevel());
            if cfg.perturbation {
                prahgd_observed(&o, x0, &cfg, &mut observer)?
            } else {
                rahgd_observed(&o, x0, &cfg, &mut observer)?
            }
        }
        SolverKind::Pragda => {
            let cfg = solver_config(spec, problem, dc, seed).map_err(to_err)?;
            let o = MinimaxOracle::new(problem.minimax().expect("validated"));
            pragda_observed(&o, x0, &cfg, &mut observer)?
        }
        SolverKind::BaselineHgd => {
            let o = BilevelOracle::new(problem.bilevel());
            let step = b.step.unwrap_or(1.0 / dc.l_tilde);
            let sigma = b.sigma.unwrap_or(e.epsilon * e.epsilon);
            baseline_hgd_observed(&o, x0, step, sigma, b.iters.unwrap_or(1000), &mut observer)?
        }
        SolverKind::BaselineGda => {
            let mm = problem.minimax().expect("validated");
            let o = MinimaxOracle::new(mm);
            let step_x = b.step.unwrap_or(1.0 / (4.0 * dc.l_tilde));
            let step_y = b.step_y.unwrap_or(1.0 / mm.constants().ell);
            let y0 = Vector::zeros(mm.dim_y());
            baseline_gda_observed(&o, x0, &y0, step_x, step_y, b.iters.unwrap_or(1000), &mut observer)?
        }
    };
    Ok((report, wall))
}

fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::InvalidParameter { .. } | Error::Constants(_) | Error::Dataset(_))
}

/// Runs every seed concurrently, then writes the summary.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, HarnessError> {
    spec.validate()?;
    let problem = spec.problem.build()?;
    let dc = derived_for(spec, &problem)?;
    let x0 = match &spec.experiment.x0 {
        Some(v) => Vector::new(v.clone()).map_err(|e| HarnessError::Spec(format!("field `experiment.x0`: {e}")))?,
        None => problem.default_x0(),
    };
    if x0.len() != problem.bilevel().dim_x() {
        return Err(HarnessError::Spec(format!(
            "field `experiment.x0`: expected {} entries, got {}",
            problem.bilevel().dim_x(),
            x0.len()
        )));
    }
    if matches!(spec.experiment.solver, SolverKind::Rahgd | SolverKind::Prahgd | SolverKind::Pragda) {
        solver_config(spec, &problem, dc, 0)?;
    }
    let dir = &spec.experiment.output;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;

    let started = Instant::now();
    let results: Vec<Result<SeedOutcome, HarnessError>> = std::thread::scope(|s| {
        let handles: Vec<_> = spec
            .experiment
            .seeds
            .iter()
            .map(|&seed| {
                let (problem, x0) = (&problem, &x0);
                s.spawn(move || -> Result<SeedOutcome, HarnessError> {
                    let t0 = Instant::now();
                    let trace_path = dir.join(trace_file_name(spec.experiment.solver, seed));
                    let (status, report) = match run_one(spec, problem, dc, x0, seed, started) {
                        Ok((report, wall)) => {
                            write_trace(&trace_path, &report, &wall)?;
                            let status = if report.termination == Termination::StoppedByObserver {
                                RunStatus::WallClock
                            } else {
                                RunStatus::Completed
                            };
                            (status, Some(report))
                        }
                        Err(e) if is_input_error(&e) => return Err(HarnessError::Spec(e.to_string())),
                        Err(e) => (RunStatus::Failed(e.to_string()), None),
                    };
                    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
                    let stationarity = match (&report, spec.experiment.verify) {
                        (Some(r), true) => {
                            verify_stationarity(problem.bilevel(), &r.w_hat, &dc, spec.experiment.epsilon).ok()
                        }
                        _ => None,
                    };
                    Ok(SeedOutcome {
                        seed,
                        status,
                        report,
                        stationarity,
                        wall_ms,
                        trace_path,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed thread panicked"))
            .collect()
    });
    let seeds = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let summary_path = dir.join(SUMMARY_FILE);
    write_summary(&summary_path, spec.experiment.solver, &seeds)?;
    let exit = if seeds.iter().any(|s| matches!(s.status, RunStatus::Failed(_))) {
        ExitStatus::Diverged
    } else if seeds.iter().any(|s| s.status == RunStatus::WallClock) {
        ExitStatus::WallClock
    } else {
        ExitStatus::Ok
    };
    Ok(ExperimentOutcome {
        seeds,
        summary_path,
        exit,
    })
}

fn write_summary(path: &Path, solver: SolverKind, seeds: &[SeedOutcome]) -> Result<(), HarnessError> {
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for s in seeds {
        let mut row: Vec<String> = vec![solver.name().into(), s.seed.to_string(), s.status.label()];
        match &s.report {
            Some(r) => {
                row.push(format!("{:?}", r.termination));
                row.push(r.epochs.to_string());
                row.push(r.total_outer_iters.to_string());
                let c = r.counters;
                row.extend([c.gc_f, c.gc_g, c.jv_g, c.hv_g].map(|v| v.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        match &s.stationarity {
            Some(v) => {
                row.push(g17(v.grad_norm));
                row.push(g17(v.grad_tol));
                row.push(g17(v.lambda_min_est));
                row.push(v.eig_converged.to_string());
                row.push(v.fosp_pass.to_string());
                row.push(v.sosp_pass.to_string());
                let c = v.counters;
                row.extend([c.gc_f, c.gc_g, c.jv_g, c.hv_g].map(|v| v.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 10)),
        }
        row.push(g17(s.wall_ms));
        row.push(
            s.report
                .as_ref()
                .map(|r| r.w_hat.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(" "))
                .unwrap_or_default(),
        );
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}
