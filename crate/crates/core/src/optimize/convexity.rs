//! Convexity of the entropy loss over a whole model, and the data sharing
//! a given entropy critical point.
//!
//! The entropy loss is convex at `Σ` exactly when `2S − Σ` is positive
//! definite along the model directions. Whether it is convex over all of a
//! model has no closed answer in general, so the verdict is three-valued:
//! a certificate, a concrete negative-curvature witness, or neither.

use std::fmt;

use nalgebra::DMatrix;

use super::model_newton::random_start;
use super::SolverConfig;
use crate::equicorr::{convexity_quartic_n, entropy_convex_n, pd_lower};
use crate::losses::{LossData, LossKind, SigmaState, MODEL_MEMBERSHIP_TOL};
use crate::polyroots::roots_in_interval;
use crate::symcore::{eigenvalues, moment_pair, Cholesky, CorrelationModel, ModelKind, SymMatrix};
use crate::{Error, Result};

/// Second directional derivatives below this count as negative curvature.
pub const CURVATURE_WITNESS_TOL: f64 = -1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConvexityVerdict {
    ProvenConvex,
    ProvenNonConvex,
    Undecided,
}

impl ConvexityVerdict {
    pub fn name(self) -> &'static str {
        match self {
            ConvexityVerdict::ProvenConvex => "proven-convex",
            ConvexityVerdict::ProvenNonConvex => "proven-non-convex",
            ConvexityVerdict::Undecided => "undecided",
        }
    }
}

impl fmt::Display for ConvexityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Is `S` in the convexity cone of `model`?
///
/// 1. `λ_min(S) ≥ n/2` certifies convexity for every correlation model,
///    since every correlation matrix has `λ_max < n`.
/// 2. One-parameter models spanned by `11ᵀ − I` (equicorrelation, and
///    every model at `n = 2`) are decided exactly by the sign of the
///    convexity quartic on the positive definite interval; a non-convex
///    verdict is confirmed by evaluating the curvature there.
/// 3. Otherwise `cfg.convexity_samples` random model points are probed
///    along the most negative eigendirection of the model Hessian.
pub fn convexity_cone_test(s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> Result<ConvexityVerdict> {
    let n = s.n();
    if model.n() != n {
        return Err(Error::DimensionMismatch(model.n(), n));
    }
    let data = LossData::new(s)?;
    let lam_min = eigenvalues(s)?.into_iter().fold(f64::INFINITY, f64::min);
    if lam_min >= 0.5 * n as f64 * (1.0 - 1e-12) {
        return Ok(ConvexityVerdict::ProvenConvex);
    }
    if n >= 2 && (model.kind() == ModelKind::Equicorrelation || (n == 2 && model.dim() == 1)) {
        return equicorrelation_verdict(&data, n);
    }
    let dim = model.dim();
    for idx in 0..cfg.convexity_samples as u64 {
        let Some(c) = random_start(model, cfg, idx) else {
            continue;
        };
        let Ok(st) = SigmaState::new_pd(&model.point(&c)) else {
            continue;
        };
        let h = data.model_hessian(LossKind::Entropy, &st, model)?;
        let eig = h.symmetric_eigen();
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("model has at least one direction");
        if lmin >= 0.0 {
            continue;
        }
        let v: Vec<f64> = (0..dim).map(|i| eig.eigenvectors[(i, imin)]).collect();
        let u = model.combination(&v);
        let u = u.scale(1.0 / u.frobenius_norm());
        if data.second_directional(LossKind::Entropy, &st, &u)? < CURVATURE_WITNESS_TOL {
            return Ok(ConvexityVerdict::ProvenNonConvex);
        }
    }
    Ok(ConvexityVerdict::Undecided)
}

fn equicorrelation_verdict(data: &LossData, n: usize) -> Result<ConvexityVerdict> {
    let pair = moment_pair(data.s())?;
    if entropy_convex_n(n, pair)? {
        return Ok(ConvexityVerdict::ProvenConvex);
    }
    // probe between consecutive sign changes of the quartic
    let lo = pd_lower(n);
    let g = convexity_quartic_n(n, pair);
    let mut cuts = vec![lo];
    cuts.extend(roots_in_interval(&g, lo, 1.0)?.values());
    cuts.push(1.0);
    let u = SymMatrix::two_value(n, 0.0, 1.0);
    let u = u.scale(1.0 / u.frobenius_norm());
    for w in cuts.windows(2) {
        let rho = 0.5 * (w[0] + w[1]);
        if g.eval(rho) >= 0.0 {
            continue;
        }
        let Ok(st) = SigmaState::new_pd(&SymMatrix::equicorrelation(n, rho)) else {
            continue;
        };
        if data.second_directional(LossKind::Entropy, &st, &u)? < CURVATURE_WITNESS_TOL {
            return Ok(ConvexityVerdict::ProvenNonConvex);
        }
    }
    Ok(ConvexityVerdict::Undecided)
}

/// Data `S` for which a fixed `Σ*` is an entropy critical point on a
/// model: the affine set `⟨S, K*U_iK*⟩ = ⟨K*, U_i⟩` for every basis
/// element, with `K* = Σ*⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalDataSpace {
    pub sigma_star: SymMatrix,
    /// `K*U_iK*`, one per basis element.
    pub functionals: Vec<SymMatrix>,
    /// `⟨K*, U_i⟩`.
    pub offsets: Vec<f64>,
    norms: Vec<f64>,
}

impl CriticalDataSpace {
    /// `⟨K* − K*SK*, U_i⟩` for every basis element.
    pub fn evaluate(&self, s: &SymMatrix) -> Result<Vec<f64>> {
        if s.n() != self.sigma_star.n() {
            return Err(Error::DimensionMismatch(self.sigma_star.n(), s.n()));
        }
        s.ensure_finite()?;
        Ok(self
            .functionals
            .iter()
            .zip(&self.offsets)
            .map(|(c, r)| r - crate::symcore::inner_product_unchecked(c, s))
            .collect())
    }

    /// Whether every normalized constraint value is within `tol` of zero.
    pub fn contains(&self, s: &SymMatrix, tol: f64) -> Result<bool> {
        let v = self.evaluate(s)?;
        Ok(v.iter().zip(&self.norms).all(|(x, nrm)| x.abs() / nrm <= tol))
    }
}

pub fn same_critical_data_space(sigma_star: &SymMatrix, model: &CorrelationModel) -> Result<CriticalDataSpace> {
    let n = sigma_star.n();
    if model.n() != n {
        return Err(Error::DimensionMismatch(model.n(), n));
    }
    let off = model.coordinates(sigma_star)?.residual;
    if off > MODEL_MEMBERSHIP_TOL {
        return Err(Error::OutsideModel(off));
    }
    let k = Cholesky::new(sigma_star).ok_or(Error::NotPositiveDefinite)?.inverse();
    let kd: DMatrix<f64> = k.to_dense();
    let mut functionals = Vec::with_capacity(model.dim());
    let mut offsets = Vec::with_capacity(model.dim());
    for (idx, e) in model.basis().iter().enumerate() {
        let u = model.basis_matrix(idx).to_dense();
        functionals.push(SymMatrix::from_dense(&(&kd * u * &kd)));
        offsets.push(e.pair(&k));
    }
    Ok(CriticalDataSpace {
        sigma_star: sigma_star.clone(),
        functionals,
        offsets,
        norms: model.basis_norms().to_vec(),
    })
}
