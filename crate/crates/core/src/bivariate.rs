//! Geometry of the bivariate correlation model.
//!
//! With `a = (S11 + S22)/2` and `b = S12`, the entropy critical points are
//! the roots in `(−1, 1)` of `f(ρ) = ρ³ − bρ² − (1 − 2a)ρ − b`, and the
//! entropy loss is convex over the whole model exactly when
//! `g(ρ) = 2a − 1 − 6bρ + 6aρ² − 2bρ³ + ρ⁴` stays nonnegative on `(−1, 1)`.

use std::fmt;

use crate::losses::{critical_point_with, CriticalPoint, LossData, LossKind};
use crate::polyroots::{roots_in_interval, Poly};
use crate::symcore::{CorrelationModel, MomentPair, SymMatrix};
use crate::Result;

/// Relative width of the band around `Δ_f = 0` reported as on-discriminant.
pub const DISCRIMINANT_F_TOL: f64 = 1e-12;
/// Relative width of the band around `Δ_g = 0`.
pub const DISCRIMINANT_G_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Central,
    RightWing,
    LeftWing,
    Bottom,
    OnDiscriminant,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Central => "central",
            Region::RightWing => "right-wing",
            Region::LeftWing => "left-wing",
            Region::Bottom => "bottom",
            Region::OnDiscriminant => "on-discriminant",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BivariateGeometry {
    pub pair: MomentPair,
    pub delta_f: f64,
    pub delta_g: f64,
    pub region: Region,
    /// Distinct critical points in the positive definite interval.
    pub pd_critical_count: usize,
    pub entropy_convex: bool,
    /// `Δ_g` is within rounding of zero, so the convexity verdict sits on
    /// the boundary of the convex region.
    pub on_convexity_boundary: bool,
}

/// `f(ρ) = ρ³ − bρ² − (1 − 2a)ρ − b`.
pub fn critical_cubic(pair: MomentPair) -> Result<Poly> {
    pair.ensure_positive_definite(2)?;
    Ok(cubic_unchecked(pair))
}

fn cubic_unchecked(pair: MomentPair) -> Poly {
    let MomentPair { b, a } = pair;
    Poly::new(vec![-b, 2.0 * a - 1.0, -b, 1.0]).expect("finite coefficients")
}

/// `Δ_f = −4[b⁴ − (a² + 8a − 11)b² + (2a − 1)³]`.
pub fn discriminant_f(pair: MomentPair) -> f64 {
    let MomentPair { b, a } = pair;
    let b2 = b * b;
    let t = 2.0 * a - 1.0;
    -4.0 * (b2 * b2 - (a * a + 8.0 * a - 11.0) * b2 + t * t * t)
}

/// `g(ρ) = 2a − 1 − 6bρ + 6aρ² − 2bρ³ + ρ⁴`.
pub fn convexity_quartic(pair: MomentPair) -> Poly {
    let MomentPair { b, a } = pair;
    Poly::new(vec![2.0 * a - 1.0, -6.0 * b, 6.0 * a, -2.0 * b, 1.0]).expect("finite coefficients")
}

/// Discriminant of [`convexity_quartic`].
pub fn discriminant_g(pair: MomentPair) -> f64 {
    let MomentPair { b, a } = pair;
    let b2 = b * b;
    let a2 = a * a;
    let q = 9.0 * a2 - 2.0 * a + 1.0;
    -256.0
        * (27.0 * b2 * b2 * b2 - 27.0 * (2.0 * a2 + 6.0 * a - 5.0) * b2 * b2
            + 9.0 * (3.0 * a2 * a2 + 36.0 * a2 * a - 32.0 * a2 + 8.0 * a + 1.0) * b2
            - (2.0 * a - 1.0) * q * q)
}

fn near_f_discriminant(pair: MomentPair, delta_f: f64) -> bool {
    delta_f.abs() <= DISCRIMINANT_F_TOL * (1.0 + pair.norm().powi(8))
}

fn near_g_discriminant(pair: MomentPair, delta_g: f64) -> bool {
    delta_g.abs() <= DISCRIMINANT_G_TOL * (1.0 + pair.norm()).powi(6)
}

/// Whether `g` stays nonnegative on `(−1, 1)`, i.e. has no sign change there.
pub fn entropy_convex(pair: MomentPair) -> Result<bool> {
    let inside = roots_in_interval(&convexity_quartic(pair), -1.0, 1.0)?;
    Ok(inside.sign_changes() == 0)
}

/// Region, critical-point count and convexity verdict for a moment pair.
pub fn classify(pair: MomentPair) -> Result<BivariateGeometry> {
    let cubic = critical_cubic(pair)?;
    let delta_f = discriminant_f(pair);
    let delta_g = discriminant_g(pair);
    let MomentPair { b, a } = pair;
    let (region, pd_critical_count) = if near_f_discriminant(pair, delta_f) {
        let inside = roots_in_interval(&cubic, -1.0, 1.0)?;
        (Region::OnDiscriminant, inside.len())
    } else if delta_f < 0.0 {
        (Region::Central, 1)
    } else if a < 0.5 {
        (Region::Bottom, 3)
    } else if b > 0.0 {
        (Region::RightWing, 1)
    } else {
        (Region::LeftWing, 1)
    };
    Ok(BivariateGeometry {
        pair,
        delta_f,
        delta_g,
        region,
        pd_critical_count,
        entropy_convex: entropy_convex(pair)?,
        on_convexity_boundary: near_g_discriminant(pair, delta_g),
    })
}

/// All positive definite entropy critical points for data with moment pair
/// `(b, a)`, sorted by entropy loss against `S̄ = [[a, b], [b, a]]`.
pub fn mle_bivariate(pair: MomentPair) -> Result<Vec<CriticalPoint>> {
    let cubic = critical_cubic(pair)?;
    let s_bar = pair.matrix(2);
    critical_points_on(&cubic, &s_bar)
}

fn critical_points_on(cubic: &Poly, s: &SymMatrix) -> Result<Vec<CriticalPoint>> {
    let data = LossData::new(s)?;
    let model = CorrelationModel::unrestricted(2);
    let mut points = roots_in_interval(cubic, -1.0, 1.0)?
        .values()
        .into_iter()
        .map(|rho| critical_point_with(&data, LossKind::Entropy, &SymMatrix::equicorrelation(2, rho), &model))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|x, y| {
        x.loss_value
            .total_cmp(&y.loss_value)
            .then(x.sigma.get(0, 1).total_cmp(&y.sigma.get(0, 1)))
    });
    Ok(points)
}

/// [`mle_bivariate`] for a full 2×2 data matrix; loss values and residuals
/// are taken against `s` itself.
pub fn mle_bivariate_for(s: &SymMatrix) -> Result<Vec<CriticalPoint>> {
    let pair = crate::symcore::moment_pair(s)?;
    critical_points_on(&critical_cubic(pair)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::critical_residual;
    use crate::polyroots::real_roots;
    use crate::Error;
    use proptest::prelude::*;

    fn pair(b: f64, a: f64) -> MomentPair {
        MomentPair::new(b, a)
    }

    #[test]
    fn cubic_examples() {
        assert_eq!(critical_cubic(pair(0.0, 1.0)).unwrap().coeffs(), &[0.0, 1.0, 0.0, 1.0]);
        let p = critical_cubic(pair(0.0, 0.3)).unwrap();
        assert!((p.coeff(1) + 0.4).abs() < 1e-15);
        assert!(matches!(critical_cubic(pair(1.0, 0.5)), Err(Error::NonPositivePair { .. })));
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant_f(pair(0.0, 1.0)), -4.0);
        let v = 3.0 + 2.0 * 2f64.sqrt();
        assert!(discriminant_f(pair(v, v)).abs() < 1e-9);
        assert!((discriminant_f(pair(0.0, 0.3)) - 0.256).abs() < 1e-14);
        assert_eq!(discriminant_g(pair(0.0, 0.5)), 0.0);
        assert_eq!(discriminant_g(pair(0.0, 1.0)), 16384.0);
    }

    #[test]
    fn quartic_examples() {
        let g = convexity_quartic(pair(0.0, 1.0));
        assert_eq!(g.coeffs(), &[1.0, 0.0, 6.0, 0.0, 1.0]);
        let (b, a) = (0.4, 1.3);
        let g = convexity_quartic(pair(b, a));
        assert!((g.eval(1.0) - 8.0 * (a - b)).abs() < 1e-13);
        assert!((g.eval(-1.0) - 8.0 * (a + b)).abs() < 1e-13);
    }

    #[test]
    fn classify_examples() {
        let g = classify(pair(0.0, 1.0)).unwrap();
        assert_eq!(g.region, Region::Central);
        assert_eq!(g.pd_critical_count, 1);
        assert!(g.entropy_convex);

        let g = classify(pair(0.0, 0.3)).unwrap();
        assert_eq!(g.region, Region::Bottom);
        assert_eq!(g.pd_critical_count, 3);
        assert!(!g.entropy_convex);

        let g = classify(pair(5.0, 5.05)).unwrap();
        if g.delta_f > 0.0 {
            assert_eq!(g.pd_critical_count, 1);
            assert_eq!(g.region, Region::RightWing);
        }
        let g = classify(pair(-5.0, 5.05)).unwrap();
        if g.delta_f > 0.0 {
            assert_eq!(g.region, Region::LeftWing);
        }
    }

    #[test]
    fn mle_examples() {
        let pts = mle_bivariate(pair(0.0, 1.0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].sigma, SymMatrix::identity(2));
        assert!(pts[0].loss_value.abs() < 1e-15);

        let pts = mle_bivariate(pair(0.0, 0.3)).unwrap();
        assert_eq!(pts.len(), 3);
        let s = 0.4f64.sqrt();
        assert!((pts[0].loss_value - pts[1].loss_value).abs() < 1e-12);
        assert!(pts[2].loss_value > pts[0].loss_value);
        assert!(pts[2].sigma.get(0, 1).abs() < 1e-15);
        assert!((pts[0].sigma.get(0, 1).abs() - s).abs() < 1e-12);

        let pts = mle_bivariate(pair(0.5, 1.0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].sigma.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mle_for_full_matrix() {
        let s = SymMatrix::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.6]]).unwrap();
        let pts = mle_bivariate_for(&s).unwrap();
        let m = CorrelationModel::unrestricted(2);
        for p in &pts {
            let direct = critical_residual(LossKind::Entropy, &p.sigma, &s, &m).unwrap();
            assert!(direct.residual <= 1e-9);
        }
    }

    fn pd_pair() -> impl Strategy<Value = MomentPair> {
        (0.01f64..10.0, -0.999f64..0.999).prop_map(|(a, t)| MomentPair::new(t * a, a))
    }

    proptest! {
        #[test]
        fn endpoint_values(p in pd_pair()) {
            let f = critical_cubic(p).unwrap();
            prop_assert!((f.eval(1.0) - 2.0 * (p.a - p.b)).abs() < 1e-12 * (1.0 + p.a));
            prop_assert!((f.eval(-1.0) + 2.0 * (p.a + p.b)).abs() < 1e-12 * (1.0 + p.a));
        }

        #[test]
        fn discriminant_sign_matches_root_count(p in pd_pair()) {
            let d = discriminant_f(p);
            prop_assume!(!near_f_discriminant(p, d));
            let r = real_roots(&critical_cubic(p).unwrap()).unwrap();
            prop_assert_eq!(d > 0.0, r.all_real && r.len() == 3);
        }

        #[test]
        fn discriminant_g_sign_matches_root_count(p in pd_pair()) {
            let d = discriminant_g(p);
            prop_assume!(!near_g_discriminant(p, d));
            let r = real_roots(&convexity_quartic(p)).unwrap();
            prop_assert_eq!(d < 0.0, r.len() == 2);
        }

        #[test]
        fn discriminant_is_even_in_b(p in pd_pair()) {
            prop_assert_eq!(discriminant_f(p), discriminant_f(MomentPair::new(-p.b, p.a)));
        }

        #[test]
        fn count_matches_interval_oracle(p in pd_pair()) {
            let g = classify(p).unwrap();
            prop_assume!(g.region != Region::OnDiscriminant);
            let inside = roots_in_interval(&critical_cubic(p).unwrap(), -1.0, 1.0).unwrap();
            prop_assert_eq!(g.pd_critical_count, inside.len());
            if g.region == Region::RightWing || g.region == Region::LeftWing {
                prop_assert!(g.delta_f > 0.0);
            }
        }

        #[test]
        fn convexity_matches_grid(p in pd_pair()) {
            let g = classify(p).unwrap();
            prop_assume!(!g.on_convexity_boundary);
            let q = convexity_quartic(p);
            let min = (1..10_000)
                .map(|i| q.eval(-1.0 + 2.0 * i as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(g.entropy_convex, min >= -1e-9);
        }

        #[test]
        fn critical_points_have_small_residual(p in pd_pair()) {
            let m = CorrelationModel::unrestricted(2);
            let s = p.matrix(2);
            for cp in mle_bivariate(p).unwrap() {
                let r = critical_residual(LossKind::Entropy, &cp.sigma, &s, &m).unwrap();
                // the gradient K − KSK cancels terms of size ‖K‖ + ‖KSK‖
                let data = LossData::new(&s).unwrap();
                let st = crate::losses::SigmaState::new(&cp.sigma).unwrap();
                let size = st.k.frobenius_norm() + data.ksk(&st).frobenius_norm();
                prop_assert!(r.residual <= 1e-9 * size.max(1.0), "{} vs {}", r.residual, size);
            }
        }
    }
}
