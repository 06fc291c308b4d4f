//! Dual of Stein's loss over the full correlation model.
//!
//! With `K(x)` equal to `W = S⁻¹` off the diagonal and `x` on it, the
//! function `f(x) = log det K(x) − tr K(x)` is strictly concave, with
//! gradient `diag(Σ(x)) − 1` and Hessian `−Σ(x) ∘ Σ(x)` where
//! `Σ(x) = K(x)⁻¹`. Its maximizer gives the Stein's-loss estimate
//! `Σ̌ = K(x*)⁻¹`, and `I(Σ̌‖S) = f(x*) + tr W − log det W`.

use super::{dot, inf_norm, objective_noise, Method, SolveTrace, SolverConfig};
use crate::symcore::{Cholesky, SymMatrix};
use crate::{Error, Result};

fn k_of(x: &[f64], w: &SymMatrix) -> Result<SymMatrix> {
    let n = w.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch(n, x.len()));
    }
    let mut k = w.clone();
    for (i, &xi) in x.iter().enumerate() {
        k.set(i, i, xi);
    }
    Ok(k)
}

fn factor(x: &[f64], w: &SymMatrix) -> Result<Cholesky> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Cholesky::new(&k_of(x, w)?).ok_or(Error::NotPositiveDefinite)
}

/// `f(x) = log det K(x) − tr K(x)`.
pub fn stein_dual_objective(x: &[f64], w: &SymMatrix) -> Result<f64> {
    let c = factor(x, w)?;
    Ok(c.log_det() - x.iter().sum::<f64>())
}

/// Gradient `diag(Σ(x)) − 1` and Hessian `−Σ(x) ∘ Σ(x)`.
pub fn stein_dual_gradient_hessian(x: &[f64], w: &SymMatrix) -> Result<(Vec<f64>, SymMatrix)> {
    let sigma = factor(x, w)?.inverse();
    let grad = sigma.diagonal().iter().map(|d| d - 1.0).collect();
    Ok((grad, sigma.hadamard(&sigma).scale(-1.0)))
}

/// Exact maximizer of `f` in coordinate `i` with the others fixed:
/// `x_i = 1 + W_{i,∖i} K_{∖i}(x)⁻¹ W_{∖i,i}`.
pub fn stein_coordinate_step(x: &[f64], w: &SymMatrix, i: usize) -> Result<f64> {
    let n = w.n();
    if i >= n {
        return Err(Error::InvalidArgument(format!("coordinate {i} out of range for n = {n}")));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let rest = k_of(x, w)?.remove_index(i);
    let c = Cholesky::new(&rest).ok_or(Error::NotPositiveDefinite)?;
    let col: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| w.get(i, j)).collect();
    Ok(1.0 + dot(&col, &c.solve(&col)))
}

/// Primal Stein's loss at the dual point: `f(x) + tr W − log det W`.
pub fn stein_primal_value(fx: f64, w: &SymMatrix) -> Result<f64> {
    let c = Cholesky::new(w).ok_or(Error::NotPositiveDefinite)?;
    Ok(fx + w.trace() - c.log_det())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteinDualSolution {
    /// `Σ̌ = K(x*)⁻¹`.
    pub sigma: SymMatrix,
    /// Diagonal of `K(x*)`.
    pub x: Vec<f64>,
    pub trace: SolveTrace,
}

fn inverse_of_s(s: &SymMatrix) -> Result<SymMatrix> {
    s.ensure_finite()?;
    Ok(Cholesky::new(s).ok_or(Error::NotPositiveDefinite)?.inverse())
}

/// Maximizes the dual by gradient ascent for `burn_in_gd_steps` steps, then
/// Newton, with backtracking that keeps `K(x)` positive definite. A run
/// that hits `max_iters` returns its best iterate with `converged = false`.
pub fn solve_stein_unrestricted(s: &SymMatrix, cfg: &SolverConfig) -> Result<SteinDualSolution> {
    cfg.validate()?;
    let w = inverse_of_s(s)?;
    let mut x = w.diagonal();
    let mut fx = stein_dual_objective(&x, &w)?;
    let mut trace = SolveTrace {
        objective_history: vec![fx],
        ..SolveTrace::default()
    };
    let mut sigma = factor(&x, &w)?.inverse();
    loop {
        let grad: Vec<f64> = sigma.diagonal().iter().map(|d| d - 1.0).collect();
        let gnorm = inf_norm(&grad);
        trace.final_grad_norm = gnorm;
        trace.final_objective = fx;
        if gnorm <= cfg.grad_tol {
            trace.converged = true;
            break;
        }
        if trace.iterations >= cfg.max_iters {
            break;
        }
        let method = if trace.iterations < cfg.burn_in_gd_steps {
            Method::Gradient
        } else {
            Method::Newton
        };
        let dir = match method {
            Method::Newton => {
                let h = sigma.hadamard(&sigma);
                Cholesky::new(&h).map(|c| c.solve(&grad)).unwrap_or_else(|| grad.clone())
            }
            _ => grad.clone(),
        };
        trace.note_method(trace.iterations, method);
        let slope = dot(&grad, &dir);
        let noise = objective_noise(fx);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if let Ok(c) = factor(&cand, &w) {
                let fc = c.log_det() - cand.iter().sum::<f64>();
                if fc >= fx + cfg.armijo * t * slope - noise {
                    accepted = Some((cand, fc, c));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc, c)) = accepted else {
            break;
        };
        x = cand;
        fx = fc;
        sigma = c.inverse();
        trace.iterations += 1;
        trace.objective_history.push(fx);
    }
    Ok(SteinDualSolution { sigma, x, trace })
}

/// Cyclic coordinate ascent using the exact coordinate maximizer. Each
/// update is a rank-one change of `K`, so `Σ = K⁻¹` is updated in `O(n²)`
/// and refactorized once per sweep. One sweep counts as one iteration.
pub fn solve_stein_coordinate(s: &SymMatrix, cfg: &SolverConfig) -> Result<SteinDualSolution> {
    cfg.validate()?;
    let w = inverse_of_s(s)?;
    let n = w.n();
    let mut x = w.diagonal();
    let mut fx = stein_dual_objective(&x, &w)?;
    let mut trace = SolveTrace {
        objective_history: vec![fx],
        ..SolveTrace::default()
    };
    trace.note_method(0, Method::Coordinate);
    let mut sigma = factor(&x, &w)?.inverse();
    loop {
        let gnorm = sigma.diagonal().iter().fold(0.0f64, |m, d| m.max((d - 1.0).abs()));
        trace.final_grad_norm = gnorm;
        trace.final_objective = fx;
        if gnorm <= cfg.grad_tol {
            trace.converged = true;
            break;
        }
        if trace.iterations >= cfg.max_iters {
            break;
        }
        let mut dense = sigma.to_dense();
        for i in 0..n {
            // Schur complement: 1/Σ_ii = x_i − W_{i,∖i} K_{∖i}⁻¹ W_{∖i,i}
            let sii = dense[(i, i)];
            let target = 1.0 + x[i] - 1.0 / sii;
            let delta = target - x[i];
            if delta == 0.0 {
                continue;
            }
            let col = dense.column(i).clone_owned();
            let denom = 1.0 + delta * sii;
            dense -= (&col * col.transpose()) * (delta / denom);
            x[i] = target;
        }
        let c = factor(&x, &w)?;
        sigma = c.inverse();
        fx = c.log_det() - x.iter().sum::<f64>();
        trace.iterations += 1;
        trace.objective_history.push(fx);
    }
    Ok(SteinDualSolution { sigma, x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equicorr::{dual_mle, EquicorrData};
    use crate::losses::{loss_value, LossKind};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn random_pd(n: usize, v: &[f64]) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |i, j| v[(i * 5 + j * 3) % v.len()] * ((i + j) as f64 * 0.7).cos());
        SymMatrix::from_dense(&(&a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2))
    }

    #[test]
    fn objective_examples() {
        let w = SymMatrix::identity(4);
        assert_eq!(stein_dual_objective(&[1.0; 4], &w).unwrap(), -4.0);
        let w1 = SymMatrix::from_diagonal(&[3.0]);
        let f = stein_dual_objective(&[2.0], &w1).unwrap();
        assert!((f - (2f64.ln() - 2.0)).abs() < 1e-15);
        let (g, h) = stein_dual_gradient_hessian(&[1.0; 3], &SymMatrix::identity(3)).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert_eq!(h, SymMatrix::identity(3).scale(-1.0));
        assert_eq!(
            stein_dual_objective(&[0.1, 0.1], &SymMatrix::two_value(2, 1.0, 1.0)),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn coordinate_step_examples() {
        let w = SymMatrix::from_rows(&[vec![2.0, 0.7], vec![0.7, 1.5]]).unwrap();
        let x = [1.3, 1.1];
        let got = stein_coordinate_step(&x, &w, 0).unwrap();
        assert!((got - (1.0 + 0.49 / 1.1)).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(stein_coordinate_step(&[1.0; 3], &SymMatrix::identity(3), i).unwrap(), 1.0);
        }
        // after the update Σ_ii = 1
        let mut x = vec![2.0, 1.5];
        x[0] = stein_coordinate_step(&x, &w, 0).unwrap();
        let (g, _) = stein_dual_gradient_hessian(&x, &w).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn identity_data() {
        let sol = solve_stein_unrestricted(&SymMatrix::identity(5), &SolverConfig::default()).unwrap();
        assert!(sol.trace.converged);
        assert_eq!(sol.trace.iterations, 0);
        assert_eq!(sol.sigma, SymMatrix::identity(5));
    }

    #[test]
    fn matches_equicorrelation_closed_form() {
        let s = SymMatrix::two_value(6, 1.7, 0.4);
        let sol = solve_stein_unrestricted(&s, &SolverConfig::default()).unwrap();
        let (rho, _) = dual_mle(&EquicorrData::from_matrix(&s).unwrap()).unwrap();
        assert!(sol.sigma.distance(&SymMatrix::equicorrelation(6, rho)) < 1e-8);
    }

    #[test]
    fn strong_duality() {
        let s = random_pd(5, &[0.3, -0.8, 0.5, 0.1, 0.9, -0.2]);
        let sol = solve_stein_unrestricted(&s, &SolverConfig::default()).unwrap();
        assert!(sol.trace.converged);
        let primal = loss_value(LossKind::Stein, &sol.sigma, &s).unwrap();
        let dual = stein_primal_value(sol.trace.final_objective, &crate::symcore::inverse(&s).unwrap()).unwrap();
        assert!((primal - dual).abs() < 1e-8, "{primal} vs {dual}");
    }

    proptest! {
        #[test]
        fn gradient_hessian_match_finite_differences(
            n in 2usize..8,
            v in proptest::collection::vec(-1.0f64..1.0, 11),
            dir in proptest::collection::vec(-1.0f64..1.0, 8),
        ) {
            let s = random_pd(n, &v);
            let w = crate::symcore::inverse(&s).unwrap();
            let x: Vec<f64> = w.diagonal().iter().map(|d| d * 1.1).collect();
            let (g, h) = stein_dual_gradient_hessian(&x, &w).unwrap();
            let d = &dir[..n];
            let eps = 1e-5;
            let shifted = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
            let fp = stein_dual_objective(&shifted(eps), &w).unwrap();
            let fm = stein_dual_objective(&shifted(-eps), &w).unwrap();
            let fd1 = (fp - fm) / (2.0 * eps);
            let an1 = dot(&g, d);
            prop_assert!((fd1 - an1).abs() <= 1e-6 * an1.abs().max(1.0));
            // second derivative from central differences of the gradient
            let (gp, _) = stein_dual_gradient_hessian(&shifted(eps), &w).unwrap();
            let (gm, _) = stein_dual_gradient_hessian(&shifted(-eps), &w).unwrap();
            let fd2 = (dot(&gp, d) - dot(&gm, d)) / (2.0 * eps);
            let hd = h.to_dense() * nalgebra::DVector::from_column_slice(d);
            let an2 = dot(hd.as_slice(), d);
            prop_assert!((fd2 - an2).abs() <= 1e-4 * an2.abs().max(1.0), "{} vs {}", fd2, an2);
            let ev = crate::symcore::eigenvalues(&h).unwrap();
            prop_assert!(ev.iter().all(|&e| e < 0.0));
        }

        #[test]
        fn ascent_is_monotone_and_feasible(n in 2usize..12, v in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let s = random_pd(n, &v);
            let sol = solve_stein_unrestricted(&s, &SolverConfig::default()).unwrap();
            prop_assert!(sol.trace.converged, "{:?}", sol.trace);
            for w in sol.trace.objective_history.windows(2) {
                prop_assert!(w[1] >= w[0] - objective_noise(w[0]));
            }
            for d in sol.sigma.diagonal() {
                prop_assert!((d - 1.0).abs() < 1e-8);
            }
            let k = crate::symcore::inverse(&sol.sigma).unwrap();
            let wm = crate::symcore::inverse(&s).unwrap();
            for i in 0..n {
                for j in 0..i {
                    prop_assert!((k.get(i, j) - wm.get(i, j)).abs() <= 1e-8 * wm.max_abs());
                }
            }
        }
    }
}
