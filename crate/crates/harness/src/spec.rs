//! Declarative experiment files.
//!
//! ```toml
//! [experiment]
//! solver = "rahgd"
//! epsilon = 1e-3
//! seeds = [0, 1, 2]
//! output = "out/quad"
//! verify = true
//!
//! [problem]
//! kind = "quad"
//! dx = 5
//! dy = 3
//! seed = 0
//!
//! [overrides]
//! rho_tilde_floor = 1e-4
//! ```

use std::path::{Path, PathBuf};

use rahgd_core::problems::{
    make_hyperclean, make_hyperopt, make_wshape_minimax, random_quad_bilevel, synth_dataset, BilinearToy, Dataset,
    Hyperclean, HypercleanParams, Hyperopt, HyperoptParams, QuadBilevel, WShapeMinimax, WShapeParams,
};
use rahgd_core::{BilevelProblem, MinimaxProblem, Vector};
use serde::Deserialize;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Rahgd,
    Prahgd,
    Pragda,
    BaselineHgd,
    BaselineGda,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rahgd => "rahgd",
            Self::Prahgd => "prahgd",
            Self::Pragda => "pragda",
            Self::BaselineHgd => "baseline_hgd",
            Self::BaselineGda => "baseline_gda",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Rahgd, Self::Prahgd, Self::Pragda, Self::BaselineHgd, Self::BaselineGda]
            .into_iter()
            .find(|k| k.name() == s)
    }

    pub fn is_minimax(self) -> bool {
        matches!(self, Self::Pragda | Self::BaselineGda)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub solver: SolverKind,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub verify: bool,
    pub max_wall_seconds: Option<f64>,
    /// Record per-iteration wall time in traces. Off by default so traces
    /// are byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    pub x0: Option<Vec<f64>>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quad {
        dx: usize,
        dy: usize,
        #[serde(default)]
        seed: u64,
    },
    Wshape {
        #[serde(default = "default_eps_w")]
        eps_w: f64,
        #[serde(default = "default_l_w")]
        l_w: f64,
    },
    Toy {
        #[serde(default)]
        reg: f64,
    },
    Hyperclean {
        #[serde(default = "default_n")]
        n_train: usize,
        #[serde(default = "default_n")]
        n_val: usize,
        #[serde(default = "default_features")]
        features: usize,
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default = "default_corruption")]
        corruption: f64,
        #[serde(default = "default_c_r")]
        c_r: f64,
        #[serde(default)]
        seed: u64,
        train_file: Option<PathBuf>,
        val_file: Option<PathBuf>,
    },
    Hyperopt {
        #[serde(default = "default_n")]
        n_train: usize,
        #[serde(default = "default_n")]
        n_val: usize,
        #[serde(default = "default_features")]
        features: usize,
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default)]
        seed: u64,
        train_file: Option<PathBuf>,
        val_file: Option<PathBuf>,
    },
}

fn default_eps_w() -> f64 {
    WShapeParams::default().eps_w
}
fn default_l_w() -> f64 {
    WShapeParams::default().l_w
}
fn default_n() -> usize {
    100
}
fn default_features() -> usize {
    10
}
fn default_classes() -> usize {
    3
}
fn default_corruption() -> f64 {
    0.3
}
fn default_c_r() -> f64 {
    0.001
}

/// Explicit solver settings that replace the schedule defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub theta: Option<f64>,
    pub big_b: Option<f64>,
    pub big_k: Option<usize>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub zeta: Option<f64>,
    pub c_const: Option<f64>,
    pub max_epochs: Option<usize>,
    pub mode: Option<String>,
    pub c_hat: Option<f64>,
    pub max_inner_iters: Option<usize>,
    pub inner_tol_floor: Option<f64>,
    pub delta_hat: Option<f64>,
    pub rho_tilde_floor: Option<f64>,
}

/// Settings of the fixed-step baselines.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    /// HGD step, or the GDA `x` step. Defaults to `1 / (4 L~)` for GDA and
    /// `1 / L~` for HGD.
    pub step: Option<f64>,
    /// GDA `y` step; defaults to `1 / ell`.
    pub step_y: Option<f64>,
    pub iters: Option<usize>,
    /// HGD inner accuracy; defaults to `epsilon^2`.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub baseline: BaselineSpec,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Spec(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Spec(msg) => HarnessError::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, why: &str| Err(HarnessError::Spec(format!("field `{field}`: {why}")));
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return bad("experiment.seeds", "must list at least one seed");
        }
        if !(e.epsilon > 0.0 && e.epsilon.is_finite()) {
            return bad("experiment.epsilon", "must be positive");
        }
        if let Some(w) = e.max_wall_seconds {
            if !(w > 0.0) {
                return bad("experiment.max_wall_seconds", "must be positive");
            }
        }
        if e.solver.is_minimax() && !self.problem.is_minimax() {
            return bad(
                "experiment.solver",
                &format!("{} needs a minimax problem (wshape or toy)", e.solver.name()),
            );
        }
        if let Some(m) = &self.overrides.mode {
            if m != "theory" && m != "adaptive" {
                return bad("overrides.mode", "must be \"theory\" or \"adaptive\"");
            }
        }
        Ok(())
    }
}

impl ProblemSpec {
    pub fn is_minimax(&self) -> bool {
        matches!(self, Self::Wshape { .. } | Self::Toy { .. })
    }

    pub fn build(&self) -> Result<BuiltProblem, HarnessError> {
        let core = |e: rahgd_core::Error| HarnessError::Spec(format!("problem: {e}"));
        Ok(match self {
            Self::Quad { dx, dy, seed } => {
                if *dx == 0 || *dy == 0 {
                    return Err(HarnessError::Spec("field `problem.dx`/`problem.dy`: must be positive".into()));
                }
                BuiltProblem::Quad(random_quad_bilevel(*dx, *dy, *seed))
            }
            Self::Wshape { eps_w, l_w } => BuiltProblem::WShape(
                make_wshape_minimax(WShapeParams {
                    eps_w: *eps_w,
                    l_w: *l_w,
                })
                .map_err(core)?,
            ),
            Self::Toy { reg } => {
                if !(0.0..=10.0).contains(reg) {
                    return Err(HarnessError::Spec("field `problem.reg`: must lie in [0, 10]".into()));
                }
                BuiltProblem::Toy(BilinearToy::new(*reg))
            }
            Self::Hyperclean {
                n_train,
                n_val,
                features,
                classes,
                corruption,
                c_r,
                seed,
                train_file,
                val_file,
            } => {
                let params = match load_pair(train_file, val_file, *classes)? {
                    Some((train, val)) => HypercleanParams::new(train, val),
                    None => {
                        check_synth(*n_train, *n_val, *features, *classes, *corruption)?;
                        HypercleanParams::synthetic(*n_train, *n_val, *features, *classes, *corruption, *seed)
                    }
                };
                BuiltProblem::Hyperclean(make_hyperclean(params.with_c_r(*c_r)).map_err(core)?)
            }
            Self::Hyperopt {
                n_train,
                n_val,
                features,
                classes,
                seed,
                train_file,
                val_file,
            } => {
                let (train, val) = match load_pair(train_file, val_file, *classes)? {
                    Some(pair) => pair,
                    None => {
                        check_synth(*n_train, *n_val, *features, *classes, 0.0)?;
                        let all = synth_dataset(n_train + n_val, *features, *classes, 0.0, *seed).normalized();
                        let labels: Vec<usize> = (0..all.len()).map(|i| all.label_index(i).unwrap_or(0)).collect();
                        let train =
                            Dataset::from_indices(all.features[..*n_train].to_vec(), &labels[..*n_train], *classes)
                                .map_err(core)?;
                        let val =
                            Dataset::from_indices(all.features[*n_train..].to_vec(), &labels[*n_train..], *classes)
                                .map_err(core)?;
                        (train, val)
                    }
                };
                BuiltProblem::Hyperopt(make_hyperopt(HyperoptParams::new(train, val)).map_err(core)?)
            }
        })
    }
}

fn check_synth(n_train: usize, n_val: usize, features: usize, classes: usize, corruption: f64) -> Result<(), HarnessError> {
    if n_train == 0 || n_val == 0 || features == 0 || classes < 2 {
        return Err(HarnessError::Spec(
            "problem: n_train, n_val and features must be positive and classes at least 2".into(),
        ));
    }
    if !(0.0..=1.0).contains(&corruption) {
        return Err(HarnessError::Spec("field `problem.corruption`: must lie in [0, 1]".into()));
    }
    Ok(())
}

fn load_pair(
    train: &Option<PathBuf>,
    val: &Option<PathBuf>,
    classes: usize,
) -> Result<Option<(Dataset, Dataset)>, HarnessError> {
    let load = |p: &PathBuf| -> Result<Dataset, HarnessError> {
        let text = std::fs::read_to_string(p)
            .map_err(|e| HarnessError::Spec(format!("cannot read {}: {e}", p.display())))?;
        Dataset::from_text(&text, Some(classes)).map_err(|e| HarnessError::Spec(format!("{}: {e}", p.display())))
    };
    match (train, val) {
        (Some(t), Some(v)) => Ok(Some((load(t)?, load(v)?))),
        (None, None) => Ok(None),
        _ => Err(HarnessError::Spec(
            "problem: train_file and val_file must be given together".into(),
        )),
    }
}

/// A constructed built-in problem.
pub enum BuiltProblem {
    Quad(QuadBilevel),
    WShape(WShapeMinimax),
    Toy(BilinearToy),
    Hyperclean(Hyperclean),
    Hyperopt(Hyperopt),
}

impl BuiltProblem {
    pub fn bilevel(&self) -> &dyn BilevelProblem {
        match self {
            Self::Quad(p) => p,
            Self::WShape(p) => p,
            Self::Toy(p) => p,
            Self::Hyperclean(p) => p,
            Self::Hyperopt(p) => p,
        }
    }

    pub fn minimax(&self) -> Option<&dyn MinimaxProblem> {
        match self {
            Self::WShape(p) => Some(p),
            Self::Toy(p) => Some(p),
            _ => None,
        }
    }

    /// Starting point used when the spec gives none.
    pub fn default_x0(&self) -> Vector {
        match self {
            Self::Quad(p) => {
                let d = BilevelProblem::dim_x(p);
                Vector::from_fn(d, |i| if i % 2 == 0 { 1.0 } else { -1.0 })
            }
            Self::WShape(p) => p.initial_x(),
            Self::Toy(_) => Vector::from([1.0, -1.0, 0.5]),
            Self::Hyperclean(p) => Vector::zeros(BilevelProblem::dim_x(p)),
            Self::Hyperopt(p) => Vector::zeros(BilevelProblem::dim_x(p)),
        }
    }

    /// Floor for `rho~` when the spec sets none: exactly quadratic value
    /// functions need one.
    pub fn default_rho_floor(&self) -> f64 {
        match self {
            Self::Quad(_) | Self::Toy(_) => 1e-4,
            _ => 0.0,
        }
    }
}

/// Built-in problem names with one-line descriptions.
pub const BUILTIN_PROBLEMS: &[(&str, &str)] = &[
    ("quad", "quadratic bilevel: g = 1/2 ||y - A x||^2, f = 1/2 ||x||^2 + b'y, random A (dx, dy, seed)"),
    ("wshape", "W-shape minimax with a strict saddle at the origin (eps_w, l_w)"),
    ("toy", "bilinear-coupled quadratic minimax (reg)"),
    ("hyperclean", "data hyper-cleaning, per-sample weights on corrupted synthetic data"),
    ("hyperopt", "per-feature ridge hyperparameters of multinomial regression"),
];
