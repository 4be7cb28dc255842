use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rahgd_harness::traces::check_trace_dir;
use rahgd_harness::{run_experiment, CliOverrides, ExitStatus, ExperimentSpec, RunStatus, SolverKind, BUILTIN_PROBLEMS};

#[derive(Parser)]
#[command(name = "rahgd", version, about = "Run and check restarted accelerated hypergradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec.
    Run {
        spec: PathBuf,
        #[arg(long, value_parser = parse_solver)]
        solver: Option<SolverKind>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Run this single seed instead of the spec's list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add a stationarity report to the summary.
        #[arg(long)]
        verify: bool,
    },
    /// Recompute run totals from a trace directory and compare with its summary.
    Verify { dir: PathBuf },
    /// Built-in problems.
    Problems {
        #[command(subcommand)]
        action: ProblemsAction,
    },
}

#[derive(Subcommand)]
enum ProblemsAction {
    List,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    SolverKind::parse(s).ok_or_else(|| {
        format!("unknown solver `{s}` (expected rahgd, prahgd, pragda, baseline_hgd or baseline_gda)")
    })
}

fn code(s: ExitStatus) -> ExitCode {
    ExitCode::from(s as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            solver,
            epsilon,
            seed,
            out,
            verify,
        } => {
            let overrides = CliOverrides {
                solver,
                epsilon,
                seed,
                out,
                verify,
            };
            let outcome = ExperimentSpec::from_file(&spec)
                .and_then(|mut s| overrides.apply(&mut s).map(|_| s))
                .and_then(|s| run_experiment(&s));
            match outcome {
                Ok(o) => {
                    for s in &o.seeds {
                        let detail = match (&s.status, &s.report) {
                            (RunStatus::Failed(msg), _) => format!("failed: {msg}"),
                            (_, Some(r)) => format!(
                                "{:?}, {} epochs, {} iterations, gc_g {}",
                                r.termination, r.epochs, r.total_outer_iters, r.counters.gc_g
                            ),
                            _ => String::new(),
                        };
                        println!("seed {}: {detail}", s.seed);
                    }
                    println!("summary: {}", o.summary_path.display());
                    code(o.exit)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_status())
                }
            }
        }
        Command::Verify { dir } => match check_trace_dir(&dir) {
            Ok(checks) => {
                let mut ok = !checks.is_empty();
                println!("file,rows,epochs,gc_f,gc_g,jv_g,hv_g,summary_match");
                for c in &checks {
                    let t = &c.totals;
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        c.file, t.rows, t.epochs, t.counters.gc_f, t.counters.gc_g, t.counters.jv_g, t.counters.hv_g,
                        c.matches()
                    );
                    ok &= c.matches();
                }
                if ok {
                    code(ExitStatus::Ok)
                } else {
                    eprintln!("error: traces disagree with the summary or no traces found");
                    code(ExitStatus::BadInput)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_status())
            }
        },
        Command::Problems {
            action: ProblemsAction::List,
        } => {
            for (name, about) in BUILTIN_PROBLEMS {
                println!("{name:<12} {about}");
            }
            code(ExitStatus::Ok)
        }
    }
}
