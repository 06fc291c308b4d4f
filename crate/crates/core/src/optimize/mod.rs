//! Numerical solvers.
//!
//! * [`stein_dual`]: the concave dual of Stein's loss over the full
//!   correlation model, solved by gradient ascent, Newton or coordinate
//!   ascent in the diagonal of `K`.
//! * [`model_newton`]: damped Newton in the coefficients of a
//!   [`CorrelationModel`](crate::CorrelationModel), minimizing the convex
//!   losses or locating entropy critical points from many starts.
//! * [`convexity`]: three-valued test for entropy-loss convexity and the
//!   data space sharing a given critical point.

use std::fmt;

use crate::{Error, Result};

pub mod convexity;
pub mod model_newton;
pub mod stein_dual;

pub use convexity::{convexity_cone_test, same_critical_data_space, ConvexityVerdict, CriticalDataSpace};
pub use model_newton::{find_critical_point, solve_entropy, solve_ssl, solve_ssl_from, solve_stein_model, ModelSolution};
pub use stein_dual::{
    solve_stein_coordinate, solve_stein_unrestricted, stein_coordinate_step, stein_dual_gradient_hessian,
    stein_dual_objective, stein_primal_value, SteinDualSolution,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stopping tolerance on the normalized gradient ∞-norm.
    pub grad_tol: f64,
    /// Gradient steps taken before switching to Newton.
    pub burn_in_gd_steps: usize,
    /// Random starts used by [`solve_entropy`] in addition to `Σ = I`.
    pub multistart_count: usize,
    pub seed: u64,
    /// Random points probed by [`convexity_cone_test`].
    pub convexity_samples: usize,
    /// Step halvings allowed per line search and per start-point rejection.
    pub max_halvings: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-10,
            burn_in_gd_steps: 10,
            multistart_count: 32,
            seed: 0,
            convexity_samples: 256,
            max_halvings: 60,
            armijo: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return Err(Error::InvalidArgument(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return Err(Error::InvalidArgument(format!("armijo must lie in (0, 0.5), got {}", self.armijo)));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gradient,
    Newton,
    ShiftedNewton,
    LevenbergMarquardt,
    Coordinate,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gradient => "gradient",
            Method::Newton => "newton",
            Method::ShiftedNewton => "shifted-newton",
            Method::LevenbergMarquardt => "levenberg-marquardt",
            Method::Coordinate => "coordinate",
        })
    }
}

/// Iteration record of one solver run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveTrace {
    pub iterations: usize,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    /// `(iteration, method)` each time the step type changes.
    pub method_switches: Vec<(usize, Method)>,
    /// Objective after every accepted step, starting with the initial value.
    /// Monotone up to [`objective_noise`]: non-increasing for minimizers,
    /// non-decreasing for the dual ascent.
    pub objective_history: Vec<f64>,
}

impl SolveTrace {
    fn note_method(&mut self, iteration: usize, m: Method) {
        if self.method_switches.last().map(|x| x.1) != Some(m) {
            self.method_switches.push((iteration, m));
        }
    }

    /// Number of iterations that used a Newton-type step.
    pub fn newton_iterations(&self) -> usize {
        let mut count = 0;
        for (idx, &(start, m)) in self.method_switches.iter().enumerate() {
            let end = self.method_switches.get(idx + 1).map_or(self.iterations, |x| x.0);
            if matches!(m, Method::Newton | Method::ShiftedNewton) {
                count += end.saturating_sub(start);
            }
        }
        count
    }
}

/// Objective changes below this are rounding noise: line searches accept
/// trial points within it of the sufficient-decrease bound, and traces are
/// monotone up to it.
pub const OBJECTIVE_NOISE_REL: f64 = 1e-12;

pub fn objective_noise(f: f64) -> f64 {
    OBJECTIVE_NOISE_REL * f.abs().max(1.0)
}

/// `‖v‖_∞`.
pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
