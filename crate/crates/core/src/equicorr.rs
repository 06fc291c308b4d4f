//! Closed forms for the equicorrelation model `Σ(ρ) = (1 − ρ)I + ρ11ᵀ`,
//! positive definite for `−1/(n−1) < ρ < 1`.
//!
//! Every loss restricted to this model depends on the data only through
//! the symmetrized matrices `S̄` (entries `a`, `b`) and `W̄` (entries `c̄`,
//! `d̄`), where `W = S⁻¹`.

use crate::bivariate::{self, Region};
use crate::losses::{critical_point_with, CriticalPoint, LossData, LossKind};
use crate::polyroots::{real_roots, roots_in_interval, Poly, RootSet};
use crate::symcore::{inverse, moment_pair, CorrelationModel, MomentPair, SymMatrix};
use crate::{Error, Result};

/// `|d̄ / c̄|` at or below which `d̄` counts as zero.
pub const DBAR_ZERO_TOL: f64 = 1e-14;
/// Relative band around `Δ_{f,n} = 0` reported as on-discriminant.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

/// Symmetrized moments of `S` and of `W = S⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquicorrData {
    pub n: usize,
    pub pair: MomentPair,
    pub cbar: f64,
    pub dbar: f64,
}

impl EquicorrData {
    pub fn from_matrix(s: &SymMatrix) -> Result<Self> {
        let n = s.n();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("equicorrelation needs n >= 2, got {n}")));
        }
        let w = LossData::new(s)?.w().clone();
        let pair = moment_pair(s)?;
        let wp = moment_pair(&w)?;
        Ok(Self {
            n,
            pair,
            cbar: wp.a,
            dbar: wp.b,
        })
    }

    /// Data already reduced to two-value form: `S̄ = (a − b)I + b11ᵀ`, with
    /// `W̄ = S̄⁻¹`.
    pub fn from_pair(n: usize, pair: MomentPair) -> Result<Self> {
        pair.ensure_positive_definite(n)?;
        let (_, cbar, dbar) = equi_det_inv(n, pair.a, pair.b)?;
        Ok(Self { n, pair, cbar, dbar })
    }

    /// `d̄`, snapped to zero when negligible against `c̄`.
    fn dbar_effective(&self) -> f64 {
        if self.dbar.abs() <= DBAR_ZERO_TOL * self.cbar.abs() {
            0.0
        } else {
            self.dbar
        }
    }
}

/// Lower end of the positive definite interval, `−1/(n−1)`.
pub fn pd_lower(n: usize) -> f64 {
    -1.0 / (n as f64 - 1.0)
}

/// Determinant and inverse entries of `(x − y)I + y11ᵀ`:
/// `det = (x − y)^{n−1}(x + (n − 1)y)`.
pub fn equi_det_inv(n: usize, x: f64, y: f64) -> Result<(f64, f64, f64)> {
    let nm1 = n as f64 - 1.0;
    let u = x - y;
    let v = x + nm1 * y;
    let det = u.powi(n as i32 - 1) * v;
    let scale = x.abs().max(y.abs()) * f64::EPSILON;
    if u.abs() <= scale || v.abs() <= scale * nm1.max(1.0) {
        return Err(Error::Singular(0.0));
    }
    let diag = (x + (nm1 - 1.0) * y) / (u * v);
    let off = -y / (u * v);
    Ok((det, diag, off))
}

/// Inverse entries `(c, d)` of `Σ(ρ)`.
pub fn inverse_entries(n: usize, rho: f64) -> Result<(f64, f64)> {
    let (_, c, d) = equi_det_inv(n, 1.0, rho)?;
    Ok((c, d))
}

/// `(n−1)d̄ρ² − ((n−2)d̄ + 1)ρ − d̄`.
pub fn dual_quadratic(n: usize, dbar: f64) -> Poly {
    let nf = n as f64;
    Poly::new(vec![-dbar, -((nf - 2.0) * dbar + 1.0), (nf - 1.0) * dbar]).expect("finite")
}

/// Stein's-loss estimate on the model and the full root set of its
/// critical quadratic.
pub fn dual_mle(data: &EquicorrData) -> Result<(f64, RootSet)> {
    let dbar = data.dbar_effective();
    let roots = real_roots(&dual_quadratic(data.n, dbar))?;
    if dbar == 0.0 {
        return Ok((0.0, roots));
    }
    let nf = data.n as f64;
    let b = 1.0 + (nf - 2.0) * dbar;
    let sq = discriminant_dual(nf, dbar).sqrt();
    // minus-sign root, evaluated without cancellation
    let rho = if b > 0.0 {
        -2.0 * dbar / (b + sq)
    } else {
        (b - sq) / (2.0 * (nf - 1.0) * dbar)
    };
    Ok((rho, roots))
}

fn discriminant_dual(nf: f64, dbar: f64) -> f64 {
    let t = nf * dbar + 1.0;
    t * t - 4.0 * dbar
}

/// Common diagonal entry of `Ǩ = Σ̌⁻¹`; its off-diagonal entry is `d̄`.
pub fn dual_mle_precision_diag(data: &EquicorrData) -> f64 {
    let dbar = data.dbar_effective();
    let nf = data.n as f64;
    0.5 * (1.0 - (nf - 2.0) * dbar + discriminant_dual(nf, dbar).sqrt())
}

/// `f_n(ρ) = (n−1)ρ³ + ((n−2)(a−1) − (n−1)b)ρ² + (2a−1)ρ − b`.
pub fn ml_cubic(n: usize, pair: MomentPair) -> Result<Poly> {
    check_n(n)?;
    pair.ensure_positive_definite(n)?;
    Ok(ml_cubic_unchecked(n, pair))
}

fn ml_cubic_unchecked(n: usize, pair: MomentPair) -> Poly {
    let nf = n as f64;
    let MomentPair { b, a } = pair;
    Poly::new(vec![
        -b,
        2.0 * a - 1.0,
        (nf - 2.0) * (a - 1.0) - (nf - 1.0) * b,
        nf - 1.0,
    ])
    .expect("finite")
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("equicorrelation needs n >= 2, got {n}")));
    }
    Ok(())
}

/// Entropy loss `I(S̄‖Σ(ρ))` in closed form.
pub fn entropy_loss(n: usize, pair: MomentPair, rho: f64) -> Result<f64> {
    let nf = n as f64;
    let nm1 = nf - 1.0;
    let MomentPair { b, a } = pair;
    let (c, d) = inverse_entries(n, rho)?;
    Ok(nm1 * ((1.0 - rho) / (a - b)).ln()
        + ((1.0 + rho * nm1) / (a + b * nm1)).ln()
        + nf * (a * c + b * d * nm1 - 1.0))
}

/// Symmetrized Stein's loss `L(Σ(ρ), S)` in closed form.
pub fn ssl_loss(data: &EquicorrData, rho: f64) -> Result<f64> {
    let nf = data.n as f64;
    let (c, d) = inverse_entries(data.n, rho)?;
    let MomentPair { b, a } = data.pair;
    Ok(0.5 * nf * (data.cbar + a * c + (nf - 1.0) * (data.dbar * rho + b * d)) - nf)
}

/// Stein's loss `I(Σ(ρ)‖S)` in closed form (requires `log det S`).
pub fn stein_loss(data: &EquicorrData, log_det_s: f64, rho: f64) -> f64 {
    let nf = data.n as f64;
    let log_det_sigma = (nf - 1.0) * (1.0 - rho).ln() + (1.0 + (nf - 1.0) * rho).ln();
    nf * data.cbar + nf * (nf - 1.0) * rho * data.dbar - log_det_sigma + log_det_s - nf
}

fn sort_by_loss(points: &mut [CriticalPoint]) {
    points.sort_by(|x, y| {
        x.loss_value
            .total_cmp(&y.loss_value)
            .then(x.sigma.get(1, 0).total_cmp(&y.sigma.get(1, 0)))
    });
}

/// Positive definite entropy critical points on the model for data with
/// moments `(b, a)`, sorted by loss against `S̄`.
pub fn mle_equicorr(n: usize, pair: MomentPair) -> Result<Vec<CriticalPoint>> {
    let cubic = ml_cubic(n, pair)?;
    let s_bar = pair.matrix(n);
    let data = LossData::new(&s_bar)?;
    let model = CorrelationModel::equicorrelation(n);
    let roots = roots_in_interval(&cubic, pd_lower(n), 1.0)?;
    let mut points = Vec::with_capacity(roots.len());
    for rho in roots.values() {
        let mut cp = critical_point_with(&data, LossKind::Entropy, &SymMatrix::equicorrelation(n, rho), &model)?;
        cp.loss_value = entropy_loss(n, pair, rho)?;
        points.push(cp);
    }
    sort_by_loss(&mut points);
    Ok(points)
}

/// SSL critical quartic on the model.
pub fn ssl_quartic(n: usize, data: &EquicorrData) -> Poly {
    let nf = n as f64;
    let MomentPair { b, a } = data.pair;
    let d = data.dbar_effective();
    Poly::new(vec![
        d - b,
        2.0 * (a + (nf - 2.0) * d),
        (nf * nf - 6.0 * nf + 6.0) * d + (nf - 2.0) * a - (nf - 1.0) * b,
        -2.0 * (nf * nf - 3.0 * nf + 2.0) * d,
        (nf - 1.0) * (nf - 1.0) * d,
    ])
    .expect("finite")
}

/// The SSL minimizer on the model: the root of [`ssl_quartic`] in the
/// positive definite interval with the smallest loss.
pub fn ssl_equicorr(data: &EquicorrData) -> Result<(f64, RootSet)> {
    check_n(data.n)?;
    let roots = roots_in_interval(&ssl_quartic(data.n, data), pd_lower(data.n), 1.0)?;
    let mut best: Option<(f64, f64)> = None;
    for rho in roots.values() {
        let l = ssl_loss(data, rho)?;
        if best.is_none_or(|(_, bl)| l < bl) {
            best = Some((rho, l));
        }
    }
    best.map(|(rho, _)| (rho, roots)).ok_or(Error::Infeasible)
}

/// Discriminant of [`ml_cubic`] as a polynomial in `(b, a)`.
pub fn discriminant_fn(n: usize, pair: MomentPair) -> f64 {
    discriminant_terms(n, pair).iter().sum()
}

fn discriminant_terms(n: usize, pair: MomentPair) -> [f64; 5] {
    let nf = n as f64;
    let nm1 = nf - 1.0;
    let nm2 = nf - 2.0;
    let n2 = nf * nf;
    let MomentPair { b, a } = pair;
    let b2 = b * b;
    let t = 2.0 * a - 1.0;
    [
        -4.0 * nm1.powi(3) * b2 * b2,
        12.0 * nm2 * nm1 * nm1 * (a - 1.0) * b2 * b,
        -4.0 * nm1
            * ((3.0 * n2 - 13.0 * nf + 13.0) * a * a - 2.0 * a * (3.0 * n2 - 8.0 * nf + 8.0) + 3.0 * n2
                - nf
                + 1.0)
            * b2,
        4.0 * nm2 * (a - 1.0) * ((n2 - 6.0 * nf + 6.0) * a * a - (2.0 * n2 - nf + 1.0) * a + n2) * b,
        t * t * (nm2 * nm2 * a * a - 2.0 * n2 * a + n2),
    ]
}

/// Whether `Δ_{f,n}` is indistinguishable from zero at working precision.
pub fn on_discriminant(n: usize, pair: MomentPair) -> bool {
    if n == 2 {
        let d = bivariate::discriminant_f(pair);
        return d.abs() <= bivariate::DISCRIMINANT_F_TOL * (1.0 + pair.norm().powi(8));
    }
    let terms = discriminant_terms(n, pair);
    let size: f64 = terms.iter().map(|t| t.abs()).sum();
    let value: f64 = terms.iter().sum();
    value.abs() <= DISCRIMINANT_TOL * size.max(f64::MIN_POSITIVE)
}

/// Entropy convexity quartic `g_n`; the entropy loss is convex over the
/// model iff `g_n ≥ 0` on `(−1/(n−1), 1)`.
pub fn convexity_quartic_n(n: usize, pair: MomentPair) -> Poly {
    let nf = n as f64;
    let nm1 = nf - 1.0;
    let MomentPair { b, a } = pair;
    Poly::new(vec![
        2.0 * a - 1.0 + 2.0 * b * (nf - 2.0),
        -(6.0 * b * nm1 + nf - 2.0),
        6.0 * a * nm1,
        ((2.0 * a - 1.0) * (nf - 2.0) - 2.0 * b * nm1) * nm1,
        nm1 * nm1,
    ])
    .expect("finite")
}

/// Exact convexity test: `g_n` has no sign change on the interval.
pub fn entropy_convex_n(n: usize, pair: MomentPair) -> Result<bool> {
    check_n(n)?;
    let inside = roots_in_interval(&convexity_quartic_n(n, pair), pd_lower(n), 1.0)?;
    Ok(inside.sign_changes() == 0)
}

/// Sufficient condition for convexity:
/// `−a/(n−1) + n/(2(n−1)) ≤ b ≤ a − n/(2(n−1))`.
/// `false` means undecided, not non-convex.
pub fn convexity_band(n: usize, pair: MomentPair) -> bool {
    let nm1 = n as f64 - 1.0;
    let half = n as f64 / (2.0 * nm1);
    let MomentPair { b, a } = pair;
    -a / nm1 + half <= b && b <= a - half
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport {
    pub n: usize,
    pub pair: MomentPair,
    pub delta_f: f64,
    /// Only available for `n = 2`.
    pub delta_g: Option<f64>,
    pub region: Region,
    pub real_critical_count: usize,
    pub pd_critical_count: usize,
    pub entropy_convex: bool,
    pub convexity_band: bool,
}

/// Discriminant signs, region and counts for the entropy loss on the model.
pub fn classify_equicorr(n: usize, pair: MomentPair) -> Result<GeometryReport> {
    let cubic = ml_cubic(n, pair)?;
    let all = real_roots(&cubic)?;
    let inside = roots_in_interval(&cubic, pd_lower(n), 1.0)?;
    let band = convexity_band(n, pair);
    if n == 2 {
        let g = bivariate::classify(pair)?;
        return Ok(GeometryReport {
            n,
            pair,
            delta_f: g.delta_f,
            delta_g: Some(g.delta_g),
            region: g.region,
            real_critical_count: all.len(),
            pd_critical_count: g.pd_critical_count,
            entropy_convex: g.entropy_convex,
            convexity_band: band,
        });
    }
    let delta_f = discriminant_fn(n, pair);
    let region = if on_discriminant(n, pair) {
        Region::OnDiscriminant
    } else if delta_f < 0.0 {
        Region::Central
    } else if inside.len() == 3 {
        Region::Bottom
    } else if all.values().iter().any(|&r| r >= 1.0) {
        Region::RightWing
    } else {
        Region::LeftWing
    };
    Ok(GeometryReport {
        n,
        pair,
        delta_f,
        delta_g: None,
        region,
        real_critical_count: all.len(),
        pd_critical_count: inside.len(),
        entropy_convex: entropy_convex_n(n, pair)?,
        convexity_band: band,
    })
}

/// An estimate on the model together with its critical polynomial roots.
#[derive(Clone, Debug, PartialEq)]
pub struct EquiFit {
    pub rho: f64,
    pub point: CriticalPoint,
    pub roots: RootSet,
}

fn fit_point(s: &SymMatrix, kind: LossKind, rho: f64, roots: RootSet) -> Result<EquiFit> {
    let n = s.n();
    let data = LossData::new(s)?;
    let point = critical_point_with(&data, kind, &SymMatrix::equicorrelation(n, rho), &CorrelationModel::equicorrelation(n))?;
    Ok(EquiFit { rho, point, roots })
}

/// Stein's-loss fit of `s`; residual and loss are against `s` itself.
pub fn dual_mle_fit(s: &SymMatrix) -> Result<EquiFit> {
    let data = EquicorrData::from_matrix(s)?;
    let (rho, roots) = dual_mle(&data)?;
    fit_point(s, LossKind::Stein, rho, roots)
}

/// Symmetrized-Stein fit of `s`.
pub fn ssl_equicorr_fit(s: &SymMatrix) -> Result<EquiFit> {
    let data = EquicorrData::from_matrix(s)?;
    let (rho, roots) = ssl_equicorr(&data)?;
    fit_point(s, LossKind::SymmetrizedStein, rho, roots)
}

/// All positive definite entropy critical points of `s`, sorted by loss
/// against `s`.
pub fn mle_equicorr_fit(s: &SymMatrix) -> Result<Vec<CriticalPoint>> {
    let n = s.n();
    let pair = moment_pair(s)?;
    let data = LossData::new(s)?;
    let model = CorrelationModel::equicorrelation(n);
    let mut points = roots_in_interval(&ml_cubic(n, pair)?, pd_lower(n), 1.0)?
        .values()
        .into_iter()
        .map(|rho| critical_point_with(&data, LossKind::Entropy, &SymMatrix::equicorrelation(n, rho), &model))
        .collect::<Result<Vec<_>>>()?;
    sort_by_loss(&mut points);
    Ok(points)
}

/// `Σ̌⁻¹` from the closed form, for cross-checks.
pub fn dual_mle_precision(data: &EquicorrData) -> SymMatrix {
    SymMatrix::two_value(data.n, dual_mle_precision_diag(data), data.dbar_effective())
}

/// Numeric inverse of `Σ(ρ)`; used to validate the closed forms.
pub fn precision_numeric(n: usize, rho: f64) -> Result<SymMatrix> {
    inverse(&SymMatrix::equicorrelation(n, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{critical_residual, loss_value};
    use proptest::prelude::*;

    fn pair(b: f64, a: f64) -> MomentPair {
        MomentPair::new(b, a)
    }

    /// Classical cubic discriminant `18abcd − 4b³d + b²c² − 4ac³ − 27a²d²`.
    fn cubic_discriminant(p: &Poly) -> f64 {
        let (d, c, b, a) = (p.coeff(0), p.coeff(1), p.coeff(2), p.coeff(3));
        18.0 * a * b * c * d - 4.0 * b.powi(3) * d + b * b * c * c - 4.0 * a * c.powi(3) - 27.0 * a * a * d * d
    }

    #[test]
    fn det_inv_examples() {
        let (det, _, _) = equi_det_inv(3, 1.0, 0.5).unwrap();
        assert!((det - 0.5).abs() < 1e-15);
        assert_eq!(equi_det_inv(5, 1.0, 0.0).unwrap(), (1.0, 1.0, 0.0));
        let rho = 0.3;
        let (c, d) = inverse_entries(4, rho).unwrap();
        let want_d = -(1.0 / (1.0 - rho)) * (rho / (1.0 + 3.0 * rho));
        assert!((d - want_d).abs() < 1e-15);
        let k = precision_numeric(4, rho).unwrap();
        assert!((k.get(0, 0) - c).abs() < 1e-13);
        assert!(matches!(equi_det_inv(3, 1.0, 1.0), Err(Error::Singular(_))));
        assert!(matches!(equi_det_inv(3, 1.0, -0.5), Err(Error::Singular(_))));
    }

    fn data_with_dbar(n: usize, dbar: f64) -> EquicorrData {
        EquicorrData {
            n,
            pair: pair(0.0, 1.0),
            cbar: 1.0,
            dbar,
        }
    }

    #[test]
    fn dual_examples() {
        let (rho, _) = dual_mle(&data_with_dbar(4, 0.0)).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(dual_mle_precision_diag(&data_with_dbar(4, 0.0)), 1.0);

        let d = data_with_dbar(3, 1.0);
        let (rho, roots) = dual_mle(&d).unwrap();
        assert!((rho - (1.0 - 3f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(roots.len(), 2);
        assert!(dual_quadratic(3, 1.0).eval(rho).abs() < 1e-14);
        assert!((dual_mle_precision_diag(&d) - 3f64.sqrt()).abs() < 1e-15);
        let (c, dd) = inverse_entries(3, rho).unwrap();
        assert!((c - 3f64.sqrt()).abs() < 1e-12);
        assert!((dd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ml_cubic_examples() {
        let p = pair(0.2, 0.9);
        assert_eq!(
            ml_cubic(2, p).unwrap(),
            bivariate::critical_cubic(p).unwrap()
        );
        let f = ml_cubic(6, pair(0.0, 1.0)).unwrap();
        assert_eq!(f.coeffs(), &[0.0, 1.0, 0.0, 5.0]);
        assert_eq!(real_roots(&f).unwrap().values(), vec![0.0]);
    }

    #[test]
    fn mle_examples() {
        let pts = mle_equicorr(5, pair(0.0, 1.0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].sigma, SymMatrix::identity(5));

        let a = mle_equicorr(2, pair(0.0, 0.3)).unwrap();
        let b = bivariate::mle_bivariate(pair(0.0, 0.3)).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.sigma.distance(&y.sigma) < 1e-12);
            assert!((x.loss_value - y.loss_value).abs() < 1e-12);
        }
    }

    #[test]
    fn ssl_quartic_at_identity() {
        let d = EquicorrData::from_matrix(&SymMatrix::identity(5)).unwrap();
        let q = ssl_quartic(5, &d);
        assert_eq!(q.coeffs(), &[0.0, 2.0, 3.0]);
        let (rho, _) = ssl_equicorr(&d).unwrap();
        assert_eq!(rho, 0.0);
    }

    #[test]
    fn ssl_matches_grid_for_two() {
        let s = SymMatrix::from_rows(&[vec![1.4, -0.5], vec![-0.5, 0.7]]).unwrap();
        let d = EquicorrData::from_matrix(&s).unwrap();
        assert_eq!(ssl_quartic(2, &d).degree(), 4);
        let (rho, _) = ssl_equicorr(&d).unwrap();
        let (mut best, mut best_l) = (0.0, f64::INFINITY);
        for i in 1..100_000 {
            let r = -1.0 + 2.0 * i as f64 / 100_000.0;
            let l = ssl_loss(&d, r).unwrap();
            if l < best_l {
                best = r;
                best_l = l;
            }
        }
        assert!((rho - best).abs() < 2e-5, "{rho} vs {best}");
    }

    #[test]
    fn discriminant_reduces_to_bivariate() {
        for &(b, a) in &[(0.1, 0.3), (-2.0, 4.0), (0.7, 0.8)] {
            let p = pair(b, a);
            let x = discriminant_fn(2, p);
            let y = bivariate::discriminant_f(p);
            assert!((x - y).abs() < 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn discriminant_on_the_diagonal() {
        for n in 2..12usize {
            let nf = n as f64;
            for sign in [-1.0, 1.0] {
                let v = sign * 2.0 * (nf * (nf - 1.0)).sqrt() + 2.0 * nf - 1.0;
                let p = pair(v, v);
                let size: f64 = discriminant_terms(n, p).iter().map(|t| t.abs()).sum();
                assert!(discriminant_fn(n, p).abs() <= 1e-12 * size, "n={n} v={v}");
            }
        }
    }

    #[test]
    fn discriminant_on_the_a_axis() {
        for n in 3..12usize {
            let nf = n as f64;
            assert!(discriminant_fn(n, pair(0.0, 0.5)).abs() < 1e-14);
            for sign in [-1.0, 1.0] {
                let a = nf * (nf + sign * 2.0 * (nf - 1.0).sqrt()) / ((nf - 2.0) * (nf - 2.0));
                let t = 2.0 * a - 1.0;
                let size = t * t * ((nf - 2.0).powi(2) * a * a + 2.0 * nf * nf * a + nf * nf);
                assert!(discriminant_fn(n, pair(0.0, a)).abs() <= 1e-12 * size);
            }
        }
    }

    #[test]
    fn convexity_quartic_examples() {
        let p = pair(0.3, 1.1);
        assert_eq!(convexity_quartic_n(2, p), bivariate::convexity_quartic(p));
        for n in [3usize, 7, 20] {
            let nf = n as f64;
            let g = convexity_quartic_n(n, p);
            let want = 2.0 * (p.a - p.b) * nf * nf;
            assert!((g.eval(1.0) - want).abs() < 1e-10 * want);
            let lo = pd_lower(n);
            let want = 2.0 * nf * nf * (p.a + p.b * (nf - 1.0)) / ((nf - 1.0) * (nf - 1.0));
            assert!((g.eval(lo) - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn band_examples() {
        assert!(convexity_band(2, pair(0.0, 1.0)));
        for n in 2..10 {
            assert!(convexity_band(n, pair(0.0, n as f64 / 2.0)));
        }
        assert!(!convexity_band(2, pair(0.0, 0.4)));
    }

    #[test]
    fn closed_form_losses_match_matrix_losses() {
        let s = SymMatrix::from_fn(4, |i, j| if i == j { 1.0 + 0.2 * i as f64 } else { 0.1 * (i + j) as f64 - 0.15 });
        let d = EquicorrData::from_matrix(&s).unwrap();
        let s_bar = d.pair.matrix(4);
        let rho = 0.27;
        let sigma = SymMatrix::equicorrelation(4, rho);
        let e = entropy_loss(4, d.pair, rho).unwrap();
        assert!((e - loss_value(LossKind::Entropy, &sigma, &s_bar).unwrap()).abs() < 1e-12);
        let l = ssl_loss(&d, rho).unwrap();
        assert!((l - loss_value(LossKind::SymmetrizedStein, &sigma, &s).unwrap()).abs() < 1e-12);
        let log_det_s = LossData::new(&s).unwrap().log_det_s();
        let st = stein_loss(&d, log_det_s, rho);
        assert!((st - loss_value(LossKind::Stein, &sigma, &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let g = classify_equicorr(2, pair(0.0, 1.0)).unwrap();
        assert_eq!(g.region, Region::Central);
        let g = classify_equicorr(5, pair(0.0, 1.0)).unwrap();
        assert_eq!(g.region, Region::Central);
        assert_eq!(g.pd_critical_count, 1);
        assert!(g.entropy_convex);
    }

    fn pd_data() -> impl Strategy<Value = (usize, MomentPair)> {
        (2usize..30, 0.05f64..5.0, 0.0f64..1.0).prop_map(|(n, a, t)| {
            let lo = -a / (n as f64 - 1.0);
            let b = lo + t * (a - lo);
            (n, MomentPair::new(b * 0.999, a))
        })
    }

    fn random_pd(n: usize, v: &[f64]) -> SymMatrix {
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| v[(i * 7 + j) % v.len()]);
        SymMatrix::from_dense(&(&a * a.transpose() + nalgebra::DMatrix::identity(n, n) * 0.1))
    }

    proptest! {
        #[test]
        fn discriminant_matches_classical(p in pd_data()) {
            let (n, pair) = p;
            let classical = cubic_discriminant(&ml_cubic(n, pair).unwrap());
            let ours = discriminant_fn(n, pair);
            let size: f64 = discriminant_terms(n, pair).iter().map(|t| t.abs()).sum();
            prop_assert!((classical - ours).abs() <= 1e-10 * size);
        }

        #[test]
        fn discriminant_sign_matches_roots(p in pd_data()) {
            let (n, pair) = p;
            prop_assume!(!on_discriminant(n, pair));
            let r = real_roots(&ml_cubic(n, pair).unwrap()).unwrap();
            let inside = roots_in_interval(&ml_cubic(n, pair).unwrap(), pd_lower(n), 1.0).unwrap();
            if discriminant_fn(n, pair) < 0.0 {
                prop_assert_eq!(r.len(), 1);
                prop_assert_eq!(inside.len(), 1);
            } else {
                prop_assert_eq!(r.len(), 3);
                prop_assert!(inside.len() == 1 || inside.len() == 3);
            }
        }

        #[test]
        fn cubic_endpoint_values(p in pd_data()) {
            let (n, pair) = p;
            let nf = n as f64;
            let f = ml_cubic(n, pair).unwrap();
            prop_assert!((f.eval(1.0) - nf * (pair.a - pair.b)).abs() < 1e-10 * nf * (1.0 + pair.a));
            let want = -nf * (pair.a + (nf - 1.0) * pair.b) / ((nf - 1.0) * (nf - 1.0));
            prop_assert!((f.eval(pd_lower(n)) - want).abs() < 1e-10 * (1.0 + pair.a));
        }

        #[test]
        fn dual_root_is_feasible(n in 2usize..50, v in proptest::collection::vec(-1.0f64..1.0, 13)) {
            let s = random_pd(n, &v);
            let d = EquicorrData::from_matrix(&s).unwrap();
            let (rho, roots) = dual_mle(&d).unwrap();
            prop_assert!(rho > pd_lower(n) && rho < 1.0);
            let (_, dd) = inverse_entries(n, rho).unwrap();
            prop_assert!((dd - d.dbar).abs() <= 1e-10 * d.cbar);
            for r in roots.values() {
                if (r - rho).abs() > 1e-9 {
                    prop_assert!(r <= pd_lower(n) || r >= 1.0);
                }
            }
            let k = dual_mle_precision(&d);
            let numeric = precision_numeric(n, rho).unwrap();
            prop_assert!(k.distance(&numeric) <= 1e-10 * numeric.frobenius_norm());
        }

        #[test]
        fn mle_points_are_critical(p in pd_data()) {
            let (n, pair) = p;
            let s = pair.matrix(n);
            let m = CorrelationModel::equicorrelation(n);
            let pts = mle_equicorr(n, pair).unwrap();
            prop_assert!(!pts.is_empty());
            for cp in pts {
                let r = critical_residual(LossKind::Entropy, &cp.sigma, &s, &m).unwrap();
                prop_assert!(r.residual <= 1e-9 * (1.0 + pair.a), "{}", r.residual);
            }
        }

        #[test]
        fn band_implies_convex(p in pd_data(), t in 0.001f64..0.999) {
            let (n, pair) = p;
            prop_assume!(convexity_band(n, pair));
            prop_assert!(entropy_convex_n(n, pair).unwrap());
            let rho = pd_lower(n) + t * (1.0 - pd_lower(n));
            let u = SymMatrix::two_value(n, 0.0, 1.0);
            let sigma = SymMatrix::equicorrelation(n, rho);
            let v = crate::losses::second_directional(LossKind::Entropy, &sigma, &pair.matrix(n), &u).unwrap();
            prop_assert!(v >= -1e-9);
        }
    }
}
