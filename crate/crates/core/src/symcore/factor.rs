use super::SymMatrix;
use crate::{Error, Result};

/// Relative pivot floor for the positive definiteness test.
pub const PD_PIVOT_TOL: f64 = 1e-12;

/// Reciprocal condition number below which a matrix counts as singular.
pub const RCOND_MIN: f64 = 1e-14;

/// Cholesky factor `A = L Lᵀ` with `L` stored dense, row-major.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a`; `None` when some pivot falls below
    /// `PD_PIVOT_TOL * max(diag(a))`.
    pub fn new(a: &SymMatrix) -> Option<Self> {
        let n = a.n();
        let max_diag = a.max_diagonal();
        if n == 0 {
            return Some(Self { n, l: Vec::new() });
        }
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            return None;
        }
        let floor = PD_PIVOT_TOL * max_diag;
        let mut l = vec![0.0; n * n];
        let dot = |l: &[f64], r1: usize, r2: usize, len: usize| -> f64 {
            l[r1 * n..r1 * n + len]
                .iter()
                .zip(&l[r2 * n..r2 * n + len])
                .map(|(x, y)| x * y)
                .sum()
        };
        for j in 0..n {
            let pivot = a.get(j, j) - dot(&l, j, j, j);
            if !(pivot > floor) {
                return None;
            }
            let d = pivot.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let s = a.get(i, j) - dot(&l, i, j, j);
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.at(i, i).ln()).sum::<f64>()
    }

    /// Smallest squared diagonal of `L` (the factorization pivots).
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|i| self.at(i, i) * self.at(i, i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.at(i, k) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.at(k, i) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        y
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        // M = L⁻¹, lower triangular
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            m[j * n + j] = 1.0 / self.at(j, j);
            for i in (j + 1)..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self.at(i, k) * m[k * n + j];
                }
                m[i * n + j] = -s / self.at(i, i);
            }
        }
        // A⁻¹ = Mᵀ M
        SymMatrix::from_fn(n, |i, j| {
            let mut s = 0.0;
            for k in i..n {
                s += m[k * n + i] * m[k * n + j];
            }
            s
        })
    }
}

/// True iff every Cholesky pivot exceeds `1e-12 * max(diag)`.
pub fn is_positive_definite(a: &SymMatrix) -> Result<bool> {
    a.ensure_finite()?;
    Ok(Cholesky::new(a).is_some())
}

pub fn log_det_pd(a: &SymMatrix) -> Result<f64> {
    a.ensure_finite()?;
    Cholesky::new(a)
        .map(|c| c.log_det())
        .ok_or(Error::NotPositiveDefinite)
}

fn norm1(a: &SymMatrix) -> f64 {
    (0..a.n())
        .map(|j| (0..a.n()).map(|i| a.get(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a nonsingular symmetric matrix. Positive definite input goes
/// through Cholesky; anything else through partially pivoted LU.
pub fn inverse(a: &SymMatrix) -> Result<SymMatrix> {
    a.ensure_finite()?;
    let inv = match Cholesky::new(a) {
        Some(c) => c.inverse(),
        None => {
            let dense = a.to_dense();
            let inv = dense.lu().try_inverse().ok_or(Error::Singular(0.0))?;
            SymMatrix::from_dense(&inv)
        }
    };
    if !inv.is_finite() {
        return Err(Error::Singular(0.0));
    }
    let rcond = 1.0 / (norm1(a) * norm1(&inv));
    if !(rcond >= RCOND_MIN) {
        return Err(Error::Singular(rcond));
    }
    Ok(inv)
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    a.ensure_finite()?;
    let mut ev: Vec<f64> = a.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}
