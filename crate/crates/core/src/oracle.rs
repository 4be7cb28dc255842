//! Oracle interfaces for bilevel and minimax problems, and the counting
//! wrappers every solver goes through.
//!
//! A problem implements [`BilevelProblem`] or [`MinimaxProblem`] and stays
//! immutable. A run wraps it in a [`BilevelOracle`] or [`MinimaxOracle`],
//! which owns that run's [`OracleCounters`]. Baselines and accelerated
//! solvers are therefore accounted identically.

use std::cell::Cell;
use std::ops::{Add, Sub};

use crate::constants::SmoothnessConstants;
use crate::vector::Vector;

/// Oracle call counts of one run.
///
/// `gc_f`/`gc_g` count gradient evaluations of `f` and `g`, `jv_g` counts
/// Jacobian-vector products with the mixed second derivative of `g`, and
/// `hv_g` counts Hessian-vector products with its `yy` block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OracleCounters {
    pub gc_f: u64,
    pub gc_g: u64,
    pub jv_g: u64,
    pub hv_g: u64,
}

impl OracleCounters {
    pub fn total_gradients(&self) -> u64 {
        self.gc_f + self.gc_g
    }

    pub fn total(&self) -> u64 {
        self.gc_f + self.gc_g + self.jv_g + self.hv_g
    }
}

impl Add for OracleCounters {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            gc_f: self.gc_f + o.gc_f,
            gc_g: self.gc_g + o.gc_g,
            jv_g: self.jv_g + o.jv_g,
            hv_g: self.hv_g + o.hv_g,
        }
    }
}

impl Sub for OracleCounters {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            gc_f: self.gc_f - o.gc_f,
            gc_g: self.gc_g - o.gc_g,
            jv_g: self.jv_g - o.jv_g,
            hv_g: self.hv_g - o.hv_g,
        }
    }
}

/// `min_x f(x, y*(x))` subject to `y*(x) = argmin_y g(x, y)`, with `g(x, .)`
/// strongly convex.
///
/// `hvp_g_yy(x, y, v)` applies the `yy` Hessian of `g` to `v`;
/// `jvp_g_xy(x, y, v)` applies the mixed block to `v` in `R^{d_y}` and
/// returns a vector in `R^{d_x}`.
pub trait BilevelProblem: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn constants(&self) -> SmoothnessConstants;

    fn grad_f_x(&self, x: &Vector, y: &Vector) -> Vector;
    fn grad_f_y(&self, x: &Vector, y: &Vector) -> Vector;
    fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector;
    fn hvp_g_yy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector;
    fn jvp_g_xy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector;

    fn value_f(&self, _x: &Vector, _y: &Vector) -> Option<f64> {
        None
    }
    fn value_g(&self, _x: &Vector, _y: &Vector) -> Option<f64> {
        None
    }
}

/// `min_x max_y fbar(x, y)` with `fbar(x, .)` strongly concave.
pub trait MinimaxProblem: Send + Sync {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn constants(&self) -> SmoothnessConstants;

    fn grad_fbar_x(&self, x: &Vector, y: &Vector) -> Vector;
    fn grad_fbar_y(&self, x: &Vector, y: &Vector) -> Vector;

    fn value(&self, _x: &Vector, _y: &Vector) -> Option<f64> {
        None
    }
}

/// Counting view of a [`BilevelProblem`] owned by a single run.
pub struct BilevelOracle<'p> {
    problem: &'p dyn BilevelProblem,
    counters: Cell<OracleCounters>,
}

impl<'p> BilevelOracle<'p> {
    pub fn new(problem: &'p dyn BilevelProblem) -> Self {
        Self {
            problem,
            counters: Cell::new(OracleCounters::default()),
        }
    }

    pub fn problem(&self) -> &'p dyn BilevelProblem {
        self.problem
    }

    pub fn counters(&self) -> OracleCounters {
        self.counters.get()
    }

    fn bump(&self, f: impl FnOnce(&mut OracleCounters)) {
        let mut c = self.counters.get();
        f(&mut c);
        self.counters.set(c);
    }

    pub fn dim_x(&self) -> usize {
        self.problem.dim_x()
    }

    pub fn dim_y(&self) -> usize {
        self.problem.dim_y()
    }

    pub fn constants(&self) -> SmoothnessConstants {
        self.problem.constants()
    }

    pub fn grad_f_x(&self, x: &Vector, y: &Vector) -> Vector {
        self.bump(|c| c.gc_f += 1);
        self.problem.grad_f_x(x, y)
    }

    pub fn grad_f_y(&self, x: &Vector, y: &Vector) -> Vector {
        self.bump(|c| c.gc_f += 1);
        self.problem.grad_f_y(x, y)
    }

    pub fn grad_g_y(&self, x: &Vector, y: &Vector) -> Vector {
        self.bump(|c| c.gc_g += 1);
        self.problem.grad_g_y(x, y)
    }

    pub fn hvp_g_yy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        self.bump(|c| c.hv_g += 1);
        self.problem.hvp_g_yy(x, y, v)
    }

    pub fn jvp_g_xy(&self, x: &Vector, y: &Vector, v: &Vector) -> Vector {
        self.bump(|c| c.jv_g += 1);
        self.problem.jvp_g_xy(x, y, v)
    }

    /// Diagnostic only; not counted.
    pub fn value_f(&self, x: &Vector, y: &Vector) -> Option<f64> {
        self.problem.value_f(x, y)
    }

    /// Diagnostic only; not counted.
    pub fn value_g(&self, x: &Vector, y: &Vector) -> Option<f64> {
        self.problem.value_g(x, y)
    }
}

/// Counting view of a [`MinimaxProblem`].
///
/// Minimax is the bilevel special case `f = fbar`, `g = -fbar`, so
/// `grad_fbar_x` is booked as `gc_f` and `grad_fbar_y` as `gc_g`.
pub struct MinimaxOracle<'p> {
    problem: &'p dyn MinimaxProblem,
    counters: Cell<OracleCounters>,
}

impl<'p> MinimaxOracle<'p> {
    pub fn new(problem: &'p dyn MinimaxProblem) -> Self {
        Self {
            problem,
            counters: Cell::new(OracleCounters::default()),
        }
    }

    pub fn problem(&self) -> &'p dyn MinimaxProblem {
        self.problem
    }

    pub fn counters(&self) -> OracleCounters {
        self.counters.get()
    }

    pub fn dim_x(&self) -> usize {
        self.problem.dim_x()
    }

    pub fn dim_y(&self) -> usize {
        self.problem.dim_y()
    }

    pub fn constants(&self) -> SmoothnessConstants {
        self.problem.constants()
    }

    pub fn grad_fbar_x(&self, x: &Vector, y: &Vector) -> Vector {
        let mut c = self.counters.get();
        c.gc_f += 1;
        self.counters.set(c);
        self.problem.grad_fbar_x(x, y)
    }

    pub fn grad_fbar_y(&self, x: &Vector, y: &Vector) -> Vector {
        let mut c = self.counters.get();
        c.gc_g += 1;
        self.counters.set(c);
        self.problem.grad_fbar_y(x, y)
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> Option<f64> {
        self.problem.value(x, y)
    }
}
