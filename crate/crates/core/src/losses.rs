//! Divergence `I(S1‖S2) = tr(S1 S2⁻¹) − log det(S1 S2⁻¹) − n` and the three
//! losses built from it, with gradients, second directional derivatives
//! and critical-equation residuals on a [`CorrelationModel`].
//!
//! Writing `K = Σ⁻¹` and `W = S⁻¹`, the gradients in `Σ` are
//!
//! | loss | value | gradient |
//! |------|-------|----------|
//! | entropy | `I(S‖Σ)` | `K − KSK` |
//! | Stein | `I(Σ‖S)` | `W − K` |
//! | symmetrized Stein | `½(I(S‖Σ) + I(Σ‖S))` | `½(W − KSK)` |
//!
//! All three Hessians restricted to a model take the form
//! `H_pq = tr(K U_p B U_q)` with `B = 2KSK − K`, `K` and `KSK` respectively.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::symcore::{inner_product_unchecked, inverse, Cholesky, CorrelationModel, SymMatrix};
use crate::{Error, Result};

/// Distance from the model's affine space tolerated by [`critical_residual`].
pub const MODEL_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    Entropy,
    Stein,
    SymmetrizedStein,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Entropy, LossKind::Stein, LossKind::SymmetrizedStein];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Entropy => "entropy",
            LossKind::Stein => "stein",
            LossKind::SymmetrizedStein => "ssl",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" | "ml" => Ok(LossKind::Entropy),
            "stein" | "dual" => Ok(LossKind::Stein),
            "ssl" | "symmetrized-stein" => Ok(LossKind::SymmetrizedStein),
            other => Err(Error::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }
}

/// A candidate `Σ` together with its loss and critical-equation residual.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub sigma: SymMatrix,
    pub loss: LossKind,
    /// NaN when `sigma` is not positive definite.
    pub loss_value: f64,
    /// `max_i |⟨G, U_i⟩| / ‖U_i‖_F` for the loss gradient `G`.
    pub residual: f64,
    pub pd: bool,
}

/// Dense product `A B C` of symmetric matrices, symmetrized on return.
fn sandwich(a: &DMatrix<f64>, b: &DMatrix<f64>) -> SymMatrix {
    SymMatrix::from_dense(&(a * b * a))
}

/// The data matrix `S` with its inverse and log-determinant, shared across
/// many evaluations at different `Σ`.
#[derive(Clone, Debug)]
pub struct LossData {
    s: SymMatrix,
    s_dense: DMatrix<f64>,
    w: SymMatrix,
    log_det_s: f64,
}

/// Quantities at one `Σ`: its inverse and, when positive definite, its
/// log-determinant.
#[derive(Clone, Debug)]
pub struct SigmaState {
    pub sigma: SymMatrix,
    pub k: SymMatrix,
    k_dense: DMatrix<f64>,
    /// `None` when `Σ` is not positive definite.
    pub log_det: Option<f64>,
}

impl SigmaState {
    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        sigma.ensure_finite()?;
        let (k, log_det) = match Cholesky::new(sigma) {
            Some(c) => (c.inverse(), Some(c.log_det())),
            None => (inverse(sigma)?, None),
        };
        let k_dense = k.to_dense();
        Ok(Self {
            sigma: sigma.clone(),
            k,
            k_dense,
            log_det,
        })
    }

    /// Like [`SigmaState::new`] but fails unless `Σ` is positive definite.
    pub fn new_pd(sigma: &SymMatrix) -> Result<Self> {
        sigma.ensure_finite()?;
        let c = Cholesky::new(sigma).ok_or(Error::NotPositiveDefinite)?;
        let k = c.inverse();
        let k_dense = k.to_dense();
        Ok(Self {
            sigma: sigma.clone(),
            k,
            k_dense,
            log_det: Some(c.log_det()),
        })
    }

    pub fn is_pd(&self) -> bool {
        self.log_det.is_some()
    }
}

impl LossData {
    pub fn new(s: &SymMatrix) -> Result<Self> {
        s.ensure_finite()?;
        let c = Cholesky::new(s).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            s: s.clone(),
            s_dense: s.to_dense(),
            w: c.inverse(),
            log_det_s: c.log_det(),
        })
    }

    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    /// `W = S⁻¹`.
    pub fn w(&self) -> &SymMatrix {
        &self.w
    }

    pub fn log_det_s(&self) -> f64 {
        self.log_det_s
    }

    pub fn n(&self) -> usize {
        self.s.n()
    }

    fn check(&self, st: &SigmaState) -> Result<()> {
        if st.sigma.n() != self.n() {
            return Err(Error::DimensionMismatch(self.n(), st.sigma.n()));
        }
        Ok(())
    }

    /// Loss value; requires `Σ` positive definite.
    pub fn value(&self, kind: LossKind, st: &SigmaState) -> Result<f64> {
        self.check(st)?;
        let log_det_sigma = st.log_det.ok_or(Error::NotPositiveDefinite)?;
        let n = self.n() as f64;
        let s_k = inner_product_unchecked(&self.s, &st.k);
        let sigma_w = inner_product_unchecked(&st.sigma, &self.w);
        Ok(match kind {
            LossKind::Entropy => s_k - self.log_det_s + log_det_sigma - n,
            LossKind::Stein => sigma_w - log_det_sigma + self.log_det_s - n,
            LossKind::SymmetrizedStein => 0.5 * (s_k + sigma_w) - n,
        })
    }

    /// `K S K`.
    pub fn ksk(&self, st: &SigmaState) -> SymMatrix {
        sandwich(&st.k_dense, &self.s_dense)
    }

    /// Gradient in `Σ`; valid for any nonsingular `Σ`.
    pub fn gradient(&self, kind: LossKind, st: &SigmaState) -> Result<SymMatrix> {
        self.check(st)?;
        Ok(match kind {
            LossKind::Entropy => st.k.sub(&self.ksk(st)),
            LossKind::Stein => self.w.sub(&st.k),
            LossKind::SymmetrizedStein => self.w.sub(&self.ksk(st)).scale(0.5),
        })
    }

    /// The middle factor `B` of the Hessian form `tr(K U B V)`.
    fn hessian_middle(&self, kind: LossKind, st: &SigmaState) -> DMatrix<f64> {
        match kind {
            LossKind::Entropy => {
                let ksk = &st.k_dense * &self.s_dense * &st.k_dense;
                ksk * 2.0 - &st.k_dense
            }
            LossKind::Stein => st.k_dense.clone(),
            LossKind::SymmetrizedStein => &st.k_dense * &self.s_dense * &st.k_dense,
        }
    }

    /// Second derivative of the loss along `Σ + εU` at `ε = 0`.
    pub fn second_directional(&self, kind: LossKind, st: &SigmaState, u: &SymMatrix) -> Result<f64> {
        self.check(st)?;
        if u.n() != self.n() {
            return Err(Error::DimensionMismatch(self.n(), u.n()));
        }
        let b = self.hessian_middle(kind, st);
        let ud = u.to_dense();
        let ku = &st.k_dense * &ud;
        let bu = &b * &ud;
        // tr(KU · BU)
        Ok(ku.component_mul(&bu.transpose()).sum())
    }

    /// Gradient of the loss in the model coefficients: `⟨G, U_p⟩`.
    pub fn model_gradient(&self, kind: LossKind, st: &SigmaState, model: &CorrelationModel) -> Result<Vec<f64>> {
        Ok(model.pairings(&self.gradient(kind, st)?))
    }

    /// Hessian of the loss in the model coefficients, `H_pq = tr(K U_p B U_q)`.
    pub fn model_hessian(&self, kind: LossKind, st: &SigmaState, model: &CorrelationModel) -> Result<DMatrix<f64>> {
        self.check(st)?;
        let n = self.n();
        let k = model.dim();
        let b = self.hessian_middle(kind, st);
        let mut h = DMatrix::zeros(k, k);
        for p in 0..k {
            // K U_p, built column by column from the sparse entries
            let mut ku = DMatrix::<f64>::zeros(n, n);
            for &(i, j, u) in model.basis()[p].entries() {
                for r in 0..n {
                    ku[(r, j)] += u * st.k_dense[(r, i)];
                    ku[(r, i)] += u * st.k_dense[(r, j)];
                }
            }
            let t = ku * &b;
            for q in 0..=p {
                let v: f64 = model.basis()[q]
                    .entries()
                    .iter()
                    .map(|&(i, j, v)| v * (t[(j, i)] + t[(i, j)]))
                    .sum();
                h[(p, q)] = v;
                h[(q, p)] = v;
            }
        }
        Ok(h)
    }
}

fn same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    Ok(())
}

/// `I(S1‖S2) = tr(S1 S2⁻¹) − log det(S1 S2⁻¹) − n`; both arguments must be
/// positive definite.
pub fn divergence(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    same_dim(s1, s2)?;
    if s1 == s2 {
        s1.ensure_finite()?;
        Cholesky::new(s1).ok_or(Error::NotPositiveDefinite)?;
        return Ok(0.0);
    }
    let data = LossData::new(s2)?;
    let st = SigmaState::new_pd(s1)?;
    data.value(LossKind::Stein, &st)
}

pub fn loss_value(kind: LossKind, sigma: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    same_dim(sigma, s)?;
    LossData::new(s)?.value(kind, &SigmaState::new_pd(sigma)?)
}

pub fn gradient(kind: LossKind, sigma: &SymMatrix, s: &SymMatrix) -> Result<SymMatrix> {
    same_dim(sigma, s)?;
    LossData::new(s)?.gradient(kind, &SigmaState::new_pd(sigma)?)
}

/// Second directional derivative. For Stein's loss only `−log det Σ`
/// contributes, since `⟨Σ, W⟩` is linear in `Σ`.
pub fn second_directional(kind: LossKind, sigma: &SymMatrix, s: &SymMatrix, u: &SymMatrix) -> Result<f64> {
    same_dim(sigma, s)?;
    LossData::new(s)?.second_directional(kind, &SigmaState::new_pd(sigma)?, u)
}

/// Packages `sigma` as a [`CriticalPoint`] of `kind` on `model`.
///
/// `sigma` need only be nonsingular; the residual is meaningful for
/// non-definite critical points too, in which case `pd` is false and the
/// loss value is NaN.
pub fn critical_residual(
    kind: LossKind,
    sigma: &SymMatrix,
    s: &SymMatrix,
    model: &CorrelationModel,
) -> Result<CriticalPoint> {
    same_dim(sigma, s)?;
    if model.n() != sigma.n() {
        return Err(Error::DimensionMismatch(model.n(), sigma.n()));
    }
    let data = LossData::new(s)?;
    critical_point_with(&data, kind, sigma, model)
}

pub(crate) fn critical_point_with(
    data: &LossData,
    kind: LossKind,
    sigma: &SymMatrix,
    model: &CorrelationModel,
) -> Result<CriticalPoint> {
    let off = model.coordinates(sigma)?.residual;
    if off > MODEL_MEMBERSHIP_TOL {
        return Err(Error::OutsideModel(off));
    }
    let st = SigmaState::new(sigma)?;
    let residual = normalized_residual(&model.pairings(&data.gradient(kind, &st)?), model);
    let pd = st.is_pd();
    let loss_value = if pd { data.value(kind, &st)? } else { f64::NAN };
    Ok(CriticalPoint {
        sigma: sigma.clone(),
        loss: kind,
        loss_value,
        residual,
        pd,
    })
}

/// `max_i |g_i| / ‖U_i‖_F`.
pub fn normalized_residual(pairings: &[f64], model: &CorrelationModel) -> f64 {
    pairings
        .iter()
        .zip(model.basis_norms())
        .map(|(g, nrm)| g.abs() / nrm)
        .fold(0.0, f64::max)
}
