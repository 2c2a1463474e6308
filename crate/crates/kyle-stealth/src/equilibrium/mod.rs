//! Finite-population and limiting equilibria, convergence diagnostics and
//! ε-equilibrium certification.

mod best_response;
mod certify;
mod convergence;
mod example3;
mod finite;
mod limiting;

pub use best_response::brute_force_best_response;
pub use certify::{certify_epsilon_equilibrium, Candidate, CandidatePrice, CertifyGrids};
pub use convergence::{convergence_report, theory_exponent, ConvergenceReport, ConvergenceRow};
pub use example3::{example3_params, example3_regression, Example3Data};
pub use finite::{solve_finite, z_diamond, EquilibriumSolution, RootRecord};
pub use limiting::{limiting_objective, solve_limiting, LimitingMethod, LimitingSolution};

use crate::numerics::{QuadratureRule, DEFAULT_NODES};
use crate::par::Execution;

/// `γ = min{βθ/(θ+α−1), 1/2}`
pub fn stealth_index(beta: f64, theta: f64, alpha: f64) -> f64 {
    (beta * theta / (theta + alpha - 1.0)).min(0.5)
}

/// Knobs for [`solve_finite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// tolerance on the first-order residuals
    pub tol: f64,
    /// inner tolerance on `z`, relative to `σ N^γ`
    pub inner_tol: f64,
    pub scan_points: usize,
    /// scan window for `ζ` in units of `σ N^γ`
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub nodes: usize,
    pub execution: Execution,
    /// skip the assumption check (used for the `λ ≡ 0` reduction)
    pub skip_validation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            inner_tol: 1e-12,
            scan_points: 400,
            scan_lo: 1e-4,
            scan_hi: 1e3,
            nodes: DEFAULT_NODES,
            execution: Execution::default(),
            skip_validation: false,
        }
    }
}

impl SolverOptions {
    pub fn sequential() -> Self {
        Self { execution: Execution::Sequential, ..Self::default() }
    }

    pub(crate) fn rule(&self) -> std::borrow::Cow<'static, QuadratureRule> {
        if self.nodes == DEFAULT_NODES {
            std::borrow::Cow::Borrowed(crate::numerics::default_rule())
        } else {
            std::borrow::Cow::Owned(QuadratureRule::gauss_hermite(self.nodes).expect("node count >= 1"))
        }
    }
}

/// A 1-D search grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub geometric: bool,
}

impl GridSpec {
    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points, geometric: false }
    }

    pub fn geometric(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points, geometric: true }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.geometric {
            crate::numerics::geometric_grid(self.lo, self.hi, self.points)
        } else {
            crate::numerics::linear_grid(self.lo, self.hi, self.points)
        }
    }
}
