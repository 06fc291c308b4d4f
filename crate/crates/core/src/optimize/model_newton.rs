//! Newton iterations in the coefficients `c` of `Σ(c) = I + Σ c_i U_i`.
//!
//! The convex losses (SSL, and Stein's loss on a restricted model) are
//! minimized by damped Newton after a short gradient burn-in. The entropy
//! loss is not convex, so its critical points are located instead by
//! Newton on the critical equations with merit `½‖∇‖²`, which converges to
//! saddles and maxima as readily as to minima. Every trial point must keep
//! `Σ(c)` positive definite.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{dot, objective_noise, Method, SolveTrace, SolverConfig};
use crate::losses::{critical_point_with, normalized_residual, CriticalPoint, LossData, LossKind, SigmaState};
use crate::symcore::{Cholesky, CorrelationModel, SymMatrix};
use crate::{Error, Result};

/// Points closer than this in Frobenius norm are the same critical point.
pub const DEDUP_TOL: f64 = 1e-6;

/// Singular values below this fraction of the largest make the Newton
/// system singular and trigger a Levenberg–Marquardt step.
const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSolution {
    pub sigma: SymMatrix,
    pub coefficients: Vec<f64>,
    pub trace: SolveTrace,
}

fn check_inputs(s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> Result<LossData> {
    cfg.validate()?;
    if model.n() != s.n() {
        return Err(Error::DimensionMismatch(model.n(), s.n()));
    }
    LossData::new(s)
}

struct Eval {
    state: SigmaState,
    grad: Vec<f64>,
}

fn evaluate(data: &LossData, kind: LossKind, model: &CorrelationModel, c: &[f64]) -> Option<Eval> {
    if c.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let state = SigmaState::new_pd(&model.point(c)).ok()?;
    let grad = data.model_gradient(kind, &state, model).ok()?;
    Some(Eval { state, grad })
}

fn step(c: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Solves `(H + μI) d = −g`, raising `μ` from zero until the shifted
/// matrix factors.
fn shifted_newton(h: &DMatrix<f64>, g: &[f64]) -> (Vec<f64>, bool) {
    let k = g.len();
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut sym = SymMatrix::from_dense(h);
    if let Some(c) = Cholesky::new(&sym) {
        return (c.solve(&neg), false);
    }
    let scale = (0..k).fold(0.0f64, |m, i| m.max(h[(i, i)].abs())).max(1.0);
    let mut mu = 1e-8 * scale;
    loop {
        for i in 0..k {
            sym.set(i, i, h[(i, i)] + mu);
        }
        if let Some(c) = Cholesky::new(&sym) {
            return (c.solve(&neg), true);
        }
        mu *= 10.0;
    }
}

/// Damped Newton minimization of a convex loss from `start`.
fn minimize(
    data: &LossData,
    kind: LossKind,
    model: &CorrelationModel,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<ModelSolution> {
    if start.len() != model.dim() {
        return Err(Error::DimensionMismatch(model.dim(), start.len()));
    }
    let mut c = start.to_vec();
    let mut cur = evaluate(data, kind, model, &c).ok_or(Error::NotPositiveDefinite)?;
    let mut fx = data.value(kind, &cur.state)?;
    let mut trace = SolveTrace {
        objective_history: vec![fx],
        ..SolveTrace::default()
    };
    loop {
        let gnorm = normalized_residual(&cur.grad, model);
        trace.final_grad_norm = gnorm;
        trace.final_objective = fx;
        if gnorm <= cfg.grad_tol {
            trace.converged = true;
            break;
        }
        if trace.iterations >= cfg.max_iters {
            break;
        }
        let (dir, method) = if trace.iterations < cfg.burn_in_gd_steps {
            (cur.grad.iter().map(|v| -v).collect(), Method::Gradient)
        } else {
            let h = data.model_hessian(kind, &cur.state, model)?;
            let (d, shifted) = shifted_newton(&h, &cur.grad);
            (d, if shifted { Method::ShiftedNewton } else { Method::Newton })
        };
        trace.note_method(trace.iterations, method);
        let slope = dot(&cur.grad, &dir);
        let noise = objective_noise(fx);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand = step(&c, &dir, t);
            if let Some(e) = evaluate(data, kind, model, &cand) {
                let fc = data.value(kind, &e.state)?;
                if fc <= fx + cfg.armijo * t * slope + noise {
                    accepted = Some((cand, e, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, e, fc)) = accepted else {
            break;
        };
        // a vanishing step that does not reduce the gradient is a stall
        if t < 1e-10 && normalized_residual(&e.grad, model) >= gnorm {
            break;
        }
        c = cand;
        cur = e;
        fx = fc;
        trace.iterations += 1;
        trace.objective_history.push(fx);
    }
    if !trace.converged {
        return Err(Error::NotConverged {
            iterations: trace.iterations,
            grad_norm: trace.final_grad_norm,
        });
    }
    Ok(ModelSolution {
        sigma: cur.state.sigma,
        coefficients: c,
        trace,
    })
}

/// Minimizes the symmetrized Stein's loss over `model`, starting at `Σ = I`.
pub fn solve_ssl(s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> Result<ModelSolution> {
    solve_ssl_from(s, model, &vec![0.0; model.dim()], cfg)
}

/// [`solve_ssl`] from the coefficient vector `start`, which must give a
/// positive definite `Σ`.
pub fn solve_ssl_from(
    s: &SymMatrix,
    model: &CorrelationModel,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<ModelSolution> {
    let data = check_inputs(s, model, cfg)?;
    minimize(&data, LossKind::SymmetrizedStein, model, start, cfg)
}

/// Minimizes Stein's loss over `model` by Newton in the coefficients. For
/// the unrestricted model the dual solver
/// [`solve_stein_unrestricted`](super::solve_stein_unrestricted) is faster.
pub fn solve_stein_model(s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> Result<ModelSolution> {
    let data = check_inputs(s, model, cfg)?;
    minimize(&data, LossKind::Stein, model, &vec![0.0; model.dim()], cfg)
}

fn merit(g: &[f64]) -> f64 {
    0.5 * dot(g, g)
}

/// Newton or Levenberg–Marquardt direction for the critical equations.
fn critical_direction(h: &DMatrix<f64>, g: &[f64], lambda: Option<f64>) -> Option<Vec<f64>> {
    let gv = DVector::from_column_slice(g);
    match lambda {
        None => {
            let svd = h.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smax > 0.0) || smin <= SINGULAR_RCOND * smax {
                return None;
            }
            let d = svd.solve(&(-&gv), 0.0).ok()?;
            Some(d.iter().copied().collect())
        }
        Some(lam) => {
            let k = g.len();
            let normal = h.transpose() * h + DMatrix::identity(k, k) * lam;
            let rhs = -(h.transpose() * gv);
            let d = normal.cholesky()?.solve(&rhs);
            Some(d.iter().copied().collect())
        }
    }
}

/// Locates a critical point of `kind` on `model` from `start` by Newton on
/// the critical equations, with backtracking on the merit `½‖g‖²` and a
/// Levenberg–Marquardt fallback. The trace objective is that merit.
/// Returns the last iterate; check `trace.converged`.
pub fn find_critical_point(
    s: &SymMatrix,
    model: &CorrelationModel,
    kind: LossKind,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<ModelSolution> {
    let data = check_inputs(s, model, cfg)?;
    if start.len() != model.dim() {
        return Err(Error::DimensionMismatch(model.dim(), start.len()));
    }
    critical_search(&data, model, kind, start, cfg)
}

fn critical_search(
    data: &LossData,
    model: &CorrelationModel,
    kind: LossKind,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<ModelSolution> {
    let mut c = start.to_vec();
    let mut cur = evaluate(data, kind, model, &c).ok_or(Error::NotPositiveDefinite)?;
    let mut m = merit(&cur.grad);
    let mut trace = SolveTrace {
        objective_history: vec![m],
        ..SolveTrace::default()
    };
    loop {
        let gnorm = normalized_residual(&cur.grad, model);
        trace.final_grad_norm = gnorm;
        trace.final_objective = m;
        if gnorm <= cfg.grad_tol {
            trace.converged = true;
            break;
        }
        if trace.iterations >= cfg.max_iters {
            break;
        }
        let h = data.model_hessian(kind, &cur.state, model)?;
        let hg: Vec<f64> = (&h * DVector::from_column_slice(&cur.grad)).iter().copied().collect();
        let hscale = h.norm_squared().max(f64::MIN_POSITIVE);
        // Newton first, then LM with growing damping
        let attempts = std::iter::once(None).chain((0..12).map(|p| Some(hscale * 1e-6 * 10f64.powi(p))));
        let mut accepted = None;
        'outer: for lambda in attempts {
            let Some(dir) = critical_direction(&h, &cur.grad, lambda) else {
                continue;
            };
            let slope = dot(&hg, &dir);
            if !(slope < 0.0) {
                continue;
            }
            let mut t = 1.0;
            for _ in 0..=cfg.max_halvings {
                let cand = step(&c, &dir, t);
                if let Some(e) = evaluate(data, kind, model, &cand) {
                    let mc = merit(&e.grad);
                    if mc <= m + cfg.armijo * t * slope {
                        let method = if lambda.is_none() {
                            Method::Newton
                        } else {
                            Method::LevenbergMarquardt
                        };
                        accepted = Some((cand, e, mc, method));
                        break 'outer;
                    }
                }
                t *= 0.5;
            }
        }
        let Some((cand, e, mc, method)) = accepted else {
            break;
        };
        trace.note_method(trace.iterations, method);
        c = cand;
        cur = e;
        m = mc;
        trace.iterations += 1;
        trace.objective_history.push(m);
    }
    Ok(ModelSolution {
        sigma: cur.state.sigma,
        coefficients: c,
        trace,
    })
}

/// Random start for multistart index `index`: coefficients uniform in
/// `[−1, 1]`, halved until `Σ(c)` is positive definite.
pub(crate) fn random_start(model: &CorrelationModel, cfg: &SolverConfig, index: u64) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let mut c: Vec<f64> = (0..model.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for _ in 0..=cfg.max_halvings {
        if Cholesky::new(&model.point(&c)).is_some() {
            return Some(c);
        }
        c.iter_mut().for_each(|v| *v *= 0.5);
    }
    None
}

fn lexicographic(a: &SymMatrix, b: &SymMatrix) -> std::cmp::Ordering {
    for (x, y) in a.packed().iter().zip(b.packed()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Positive definite entropy critical points found from `Σ = I` and
/// `cfg.multistart_count` random starts, deduplicated and sorted by loss
/// then entries. The first entry is the best local minimum found; nothing
/// certifies it as global.
pub fn solve_entropy(s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> Result<Vec<CriticalPoint>> {
    let data = check_inputs(s, model, cfg)?;
    let k = model.dim();
    let found: Vec<Option<Vec<f64>>> = (0..=cfg.multistart_count as u64)
        .into_par_iter()
        .map(|idx| {
            let start = if idx == 0 {
                vec![0.0; k]
            } else {
                random_start(model, cfg, idx)?
            };
            let sol = critical_search(&data, model, LossKind::Entropy, &start, cfg).ok()?;
            sol.trace.converged.then_some(sol.coefficients)
        })
        .collect();
    let mut points = Vec::new();
    for c in found.into_iter().flatten() {
        let p = critical_point_with(&data, LossKind::Entropy, &model.point(&c), model)?;
        if p.pd {
            points.push(p);
        }
    }
    points.sort_by(|a, b| {
        a.loss_value
            .total_cmp(&b.loss_value)
            .then_with(|| lexicographic(&a.sigma, &b.sigma))
    });
    let mut distinct: Vec<CriticalPoint> = Vec::new();
    for p in points {
        if distinct.iter().all(|q| q.sigma.distance(&p.sigma) >= DEDUP_TOL) {
            distinct.push(p);
        }
    }
    Ok(distinct)
}
