//! Tridiagonal equicorrelation model: unit diagonal, `ρ` on the first
//! off-diagonal, zero elsewhere.
//!
//! The leading principal minors `δ_k(ρ)` satisfy `δ_k = δ_{k−1} − ρ²δ_{k−2}`
//! with `δ_0 = δ_1 = 1`, and the Stein's-loss critical equation reduces to
//! a polynomial of degree `2⌊n/2⌋` built from them.

use crate::losses::{critical_point_with, CriticalPoint, LossData, LossKind, SigmaState};
use crate::polyroots::{roots_in_interval, Poly, RootSet, MAX_DEGREE};
use crate::symcore::{inverse, CorrelationModel, SymMatrix};
use crate::{Error, Result};

/// `δ_0 … δ_n` as polynomials in `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSequence {
    pub values: Vec<Poly>,
}

impl DeltaSequence {
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> &Poly {
        &self.values[k]
    }
}

/// Binomial coefficient in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `δ_k(ρ) = Σ_i (−1)^i C(k − i, i) ρ^{2i}`.
pub fn delta_k(k: usize) -> Result<Poly> {
    let mut c = vec![0.0; 2 * (k / 2) + 1];
    for i in 0..=k / 2 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        c[2 * i] = sign * binomial((k - i) as u64, i as u64) as f64;
    }
    Poly::new(c)
}

pub fn delta(n: usize) -> Result<DeltaSequence> {
    if 2 * (n / 2) > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(2 * (n / 2)));
    }
    let values = (0..=n).map(delta_k).collect::<Result<Vec<_>>>()?;
    Ok(DeltaSequence { values })
}

/// `K_ij` of `Σ(ρ)⁻¹` with 1-based indices. Off-diagonal entries use
/// `K_ij = (−1)^{i+j} ρ^{j−i} δ_{i−1} δ_{n−j} / δ_n` for `i < j`; diagonal
/// entries come from a numeric inverse.
pub fn tridiag_precision_entry(n: usize, i: usize, j: usize, rho: f64) -> Result<f64> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidArgument(format!(
            "entry ({i}, {j}) out of range for n = {n}"
        )));
    }
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        let k = inverse(&SymMatrix::tridiag_equicorrelation(n, rho))?;
        return Ok(k.get(i - 1, i - 1));
    }
    let dn = delta_k(n)?.eval(rho);
    let scale = delta_k(n)?.abs_eval(rho);
    if dn.abs() <= 1e-14 * scale {
        return Err(Error::Singular(0.0));
    }
    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * rho.powi((j - i) as i32) * delta_k(i - 1)?.eval(rho) * delta_k(n - j)?.eval(rho) / dn)
}

/// `s δ_n + ρ Σ_{i=1}^{n−1} δ_{i−1} δ_{n−i−1}`.
pub fn tridiag_dual_polynomial(n: usize, s: f64) -> Result<Poly> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tridiagonal model needs n >= 2, got {n}")));
    }
    let d = delta(n)?;
    let mut sum = Poly::zero();
    for i in 1..n {
        sum = &sum + &(d.get(i - 1) * d.get(n - i - 1));
    }
    let p = &d.get(n).scale(s) + &(&sum * &Poly::monomial(1.0, 1));
    Poly::new(p.coeffs().to_vec())
}

/// Leading coefficient of the dual polynomial for `s ≠ 0`:
/// `s (−1)^{⌊n/2⌋} C(n − ⌊n/2⌋, ⌊n/2⌋)`.
pub fn dual_leading_coefficient(n: usize, s: f64) -> f64 {
    let h = n / 2;
    let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
    s * sign * binomial((n - h) as u64, h as u64) as f64
}

/// Half-width of the positive definite interval `(−r, r)`: the smallest
/// positive root among `δ_2 … δ_n`.
pub fn pd_radius(n: usize) -> Result<f64> {
    if n < 2 {
        return Ok(f64::INFINITY);
    }
    let d = delta(n)?;
    let mut r = f64::INFINITY;
    for k in 2..=n {
        let roots = roots_in_interval(d.get(k), 0.0, 2.0)?;
        if let Some(&x) = roots.values().first() {
            r = r.min(x);
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TridiagFit {
    pub rho: f64,
    pub point: CriticalPoint,
    pub roots: RootSet,
    pub pd_radius: f64,
}

/// Stein's-loss estimate on the model from `W = S⁻¹`: among the roots of the
/// dual polynomial inside the positive definite interval, the one with the
/// smallest loss.
pub fn dual_mle_tridiag(w: &SymMatrix) -> Result<TridiagFit> {
    let n = w.n();
    w.ensure_finite()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tridiagonal model needs n >= 2, got {n}")));
    }
    if 2 * (n / 2) > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(2 * (n / 2)));
    }
    let s_mat = inverse(w)?;
    let data = LossData::new(&s_mat)?;
    let s: f64 = (0..n - 1).map(|i| w.get(i, i + 1)).sum();
    let poly = tridiag_dual_polynomial(n, s)?;
    let radius = pd_radius(n)?;
    let roots = roots_in_interval(&poly, -radius, radius)?;
    let mut best: Option<(f64, f64)> = None;
    for rho in roots.values() {
        let Ok(st) = SigmaState::new_pd(&SymMatrix::tridiag_equicorrelation(n, rho)) else {
            continue;
        };
        let l = data.value(LossKind::Stein, &st)?;
        if best.is_none_or(|(_, bl)| l < bl) {
            best = Some((rho, l));
        }
    }
    let (rho, _) = best.ok_or(Error::Infeasible)?;
    let model = CorrelationModel::tridiag_equicorrelation(n);
    let point = critical_point_with(&data, LossKind::Stein, &SymMatrix::tridiag_equicorrelation(n, rho), &model)?;
    Ok(TridiagFit {
        rho,
        point,
        roots,
        pd_radius: radius,
    })
}
