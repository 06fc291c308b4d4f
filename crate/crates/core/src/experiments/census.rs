//! Entropy critical points of the unrestricted `3 × 3` correlation model at
//! `S = tI₃`, in the off-diagonal coordinates `(σ₁₂, σ₁₃, σ₂₃)`:
//!
//! * (a) the origin;
//! * (b) `±√(1 − 2t)` in one coordinate, zero in the others (6 points);
//! * (c) `(x, −x, x)`, `(−x, x, x)`, `(x, x, −x)`, `(−x, −x, −x)` with
//!   `x = α = (t − 1 + √(t² − 18t + 9)) / 4`;
//! * (d) the same orbit with `x = β = (t − 1 − √(t² − 18t + 9)) / 4`.
//!
//! Group (b) merges into the origin at `t = ½` and (c) meets (d) at
//! `t = 3(3 − 2√2)`.

use crate::losses::{critical_residual, CriticalPoint, LossKind};
use crate::symcore::{CorrelationModel, SymMatrix};
use crate::{Error, Result};

/// Largest entropy critical residual accepted for an analytic point.
pub const CENSUS_RESIDUAL_TOL: f64 = 1e-9;

/// `|1 − 2t|` or `|t² − 18t + 9|` below this is treated as an exact
/// collapse of two groups.
pub const COLLAPSE_TOL: f64 = 1e-9;

/// Positive definite critical points per group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CensusGroups {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusResult {
    pub t: f64,
    /// Every real candidate, positive definite or not.
    pub points: Vec<CriticalPoint>,
    pub pd_count: usize,
    pub groups: CensusGroups,
    /// Whether every candidate passed the residual check.
    pub verified: bool,
}

fn from_offdiag(x12: f64, x13: f64, x23: f64) -> SymMatrix {
    SymMatrix::from_rows(&[vec![1.0, x12, x13], vec![x12, 1.0, x23], vec![x13, x23, 1.0]])
        .expect("3 x 3 symmetric by construction")
}

fn orbit(x: f64) -> [SymMatrix; 4] {
    [
        from_offdiag(x, -x, x),
        from_offdiag(-x, x, x),
        from_offdiag(x, x, -x),
        from_offdiag(-x, -x, -x),
    ]
}

/// `(α, β)` when real, with a vanishing radicand snapped to zero.
pub fn alpha_beta(t: f64) -> Option<(f64, f64)> {
    let disc = t * t - 18.0 * t + 9.0;
    let root = if disc.abs() <= COLLAPSE_TOL {
        0.0
    } else if disc > 0.0 {
        disc.sqrt()
    } else {
        return None;
    };
    Some(((t - 1.0 + root) / 4.0, (t - 1.0 - root) / 4.0))
}

/// Analytic candidates by group, with collapsed groups listed once.
fn candidates(t: f64) -> [Vec<SymMatrix>; 4] {
    let origin = vec![SymMatrix::identity(3)];
    let mut axis = Vec::new();
    let h = 1.0 - 2.0 * t;
    if h > COLLAPSE_TOL {
        let r = h.sqrt();
        for v in [r, -r] {
            axis.push(from_offdiag(v, 0.0, 0.0));
            axis.push(from_offdiag(0.0, v, 0.0));
            axis.push(from_offdiag(0.0, 0.0, v));
        }
    }
    let (mut c, mut d) = (Vec::new(), Vec::new());
    if let Some((alpha, beta)) = alpha_beta(t) {
        c.extend(orbit(alpha));
        if alpha != beta {
            d.extend(orbit(beta));
        }
    }
    [origin, axis, c, d]
}

/// Builds, checks and counts the analytic critical points at `S = tI₃`.
pub fn census_ti(t: f64) -> Result<CensusResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("census needs t > 0, got {t}")));
    }
    let s = SymMatrix::scaled_identity(3, t);
    let model = CorrelationModel::unrestricted(3);
    let mut points = Vec::new();
    let mut pd = [0usize; 4];
    let mut verified = true;
    for (g, group) in candidates(t).into_iter().enumerate() {
        for sigma in group {
            let p = match critical_residual(LossKind::Entropy, &sigma, &s, &model) {
                Ok(p) => p,
                // a candidate on the singular boundary cannot be a critical point
                Err(Error::Singular(_)) => continue,
                Err(e) => return Err(e),
            };
            verified &= p.residual <= CENSUS_RESIDUAL_TOL;
            if p.pd {
                pd[g] += 1;
            }
            points.push(p);
        }
    }
    Ok(CensusResult {
        t,
        pd_count: pd.iter().sum(),
        groups: CensusGroups {
            a: pd[0],
            b: pd[1],
            c: pd[2],
            d: pd[3],
        },
        points,
        verified,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityThresholds {
    /// `½`: group (b) merges into the origin.
    pub t_low: f64,
    /// `3(3 − 2√2)`: groups (c) and (d) merge and leave the real points.
    pub t_high: f64,
    /// Group (d) has lower loss than the origin at `t_low − 1e−3`.
    pub group_d_wins_below: bool,
    /// The origin is the only positive definite critical point at
    /// `t_high + 1e−3`, hence the minimizer.
    pub origin_wins_above: bool,
    /// Where the losses of the origin and group (d) cross. It lies in
    /// `(t_low, t_high)`, so just below `t_high` the origin already wins.
    pub loss_crossover: f64,
}

/// Loss of the origin and of group (d) at `S = tI₃`, when (d) is real and
/// positive definite.
pub fn origin_and_group_d_losses(t: f64) -> Result<(f64, Option<f64>)> {
    let census = census_ti(t)?;
    let origin = census.points[0].loss_value;
    let group_d = (census.groups.d > 0).then(|| census.points.last().map(|p| p.loss_value)).flatten();
    Ok((origin, group_d))
}

pub fn census_mle_identity_threshold() -> Result<IdentityThresholds> {
    let t_low = 0.5;
    let t_high = 3.0 * (3.0 - 2.0 * std::f64::consts::SQRT_2);
    let (origin, group_d) = origin_and_group_d_losses(t_low - 1e-3)?;
    let group_d_wins_below = group_d.is_some_and(|d| d < origin);
    let above = census_ti(t_high + 1e-3)?;
    let origin_wins_above = above.pd_count == 1 && above.groups.a == 1;

    // bisection on loss(d) − loss(origin), negative at t_low
    let gap = |t: f64| -> Result<f64> {
        let (o, d) = origin_and_group_d_losses(t)?;
        Ok(d.map_or(f64::INFINITY, |d| d - o))
    };
    let (mut lo, mut hi) = (t_low, t_high - 1e-9);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(IdentityThresholds {
        t_low,
        t_high,
        group_d_wins_below,
        origin_wins_above,
        loss_crossover: 0.5 * (lo + hi),
    })
}
