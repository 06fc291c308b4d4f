use nalgebra::DMatrix;

use crate::{Error, Result};

/// Dense real symmetric matrix stored as a packed lower triangle.
///
/// Entry `(i, j)` and `(j, i)` share one storage slot, so asymmetry cannot
/// arise after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, t: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, t);
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from a function evaluated on the lower triangle (`i >= j`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// `(x - y) I + y 11ᵀ`.
    pub fn two_value(n: usize, diag: f64, off: f64) -> Self {
        Self::from_fn(n, |i, j| if i == j { diag } else { off })
    }

    /// Equicorrelation matrix `(1 - ρ) I + ρ 11ᵀ`.
    pub fn equicorrelation(n: usize, rho: f64) -> Self {
        Self::two_value(n, 1.0, rho)
    }

    /// Unit diagonal with `ρ` on the first off-diagonal.
    pub fn tridiag_equicorrelation(n: usize, rho: f64) -> Self {
        Self::from_fn(n, |i, j| match i - j {
            0 => 1.0,
            1 => rho,
            _ => 0.0,
        })
    }

    /// Parses square rows. Pairs differing by more than `1e-9` relative to the
    /// largest entry are rejected; smaller gaps are averaged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch(n, r.len()));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                let gap = (rows[i][j] - rows[j][i]).abs();
                if gap > 1e-9 * scale {
                    return Err(Error::Asymmetric { i, j, gap });
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Symmetric part of a dense matrix, `(A + Aᵀ)/2`.
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[packed_index(i, j)] = v;
    }

    /// Packed lower-triangle storage, row by row.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        inner_product_unchecked(self, self).sqrt()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.axpy(-1.0, other)
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    /// Principal submatrix with row/column `k` removed.
    pub fn remove_index(&self, k: usize) -> Self {
        let idx: Vec<usize> = (0..self.n).filter(|&i| i != k).collect();
        Self::from_fn(self.n - 1, |i, j| self.get(idx[i], idx[j]))
    }

    /// Frobenius distance between two matrices of equal size.
    pub fn distance(&self, other: &SymMatrix) -> f64 {
        self.sub(other).frobenius_norm()
    }
}

pub(crate) fn inner_product_unchecked(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..a.n {
        let row = i * (i + 1) / 2;
        for j in 0..i {
            off += a.data[row + j] * b.data[row + j];
        }
        diag += a.data[row + i] * b.data[row + i];
    }
    diag + 2.0 * off
}

/// Trace inner product `⟨A, B⟩ = tr(AB) = Σ A_ij B_ij`.
pub fn inner_product(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(a.n, b.n));
    }
    Ok(inner_product_unchecked(a, b))
}

/// Permutation average of `S`: every diagonal entry replaced by the mean
/// diagonal and every off-diagonal entry by the mean off-diagonal.
pub fn symmetrize(s: &SymMatrix) -> Result<SymMatrix> {
    s.ensure_finite()?;
    let n = s.n;
    if n < 2 {
        return Ok(s.clone());
    }
    let pair = pair_unchecked(s);
    Ok(SymMatrix::two_value(n, pair.a, pair.b))
}

/// `(b, a)` = (mean off-diagonal, mean diagonal) of `S̄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentPair {
    pub b: f64,
    pub a: f64,
}

impl MomentPair {
    pub fn new(b: f64, a: f64) -> Self {
        Self { b, a }
    }

    /// Whether `(a - b) I + b 11ᵀ` is positive definite in dimension `n`.
    pub fn is_positive_definite(&self, n: usize) -> bool {
        let nm1 = n as f64 - 1.0;
        self.a > self.b && self.a + nm1 * self.b > 0.0
    }

    pub fn ensure_positive_definite(&self, n: usize) -> Result<()> {
        if self.a.is_finite() && self.b.is_finite() && self.is_positive_definite(n) {
            Ok(())
        } else {
            Err(Error::NonPositivePair {
                n,
                b: self.b,
                a: self.a,
            })
        }
    }

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// The symmetrized matrix `(a - b) I + b 11ᵀ`.
    pub fn matrix(&self, n: usize) -> SymMatrix {
        SymMatrix::two_value(n, self.a, self.b)
    }
}

fn pair_unchecked(s: &SymMatrix) -> MomentPair {
    let n = s.n;
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        diag += s.get(i, i);
        for j in 0..i {
            off += s.get(i, j);
        }
    }
    MomentPair {
        b: off / (n * (n - 1) / 2) as f64,
        a: diag / n as f64,
    }
}

pub fn moment_pair(s: &SymMatrix) -> Result<MomentPair> {
    if s.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment pair needs n >= 2, got {}",
            s.n
        )));
    }
    s.ensure_finite()?;
    Ok(pair_unchecked(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_examples() {
        let i3 = SymMatrix::identity(3);
        assert_eq!(inner_product(&i3, &i3).unwrap(), 3.0);
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(inner_product(&a, &SymMatrix::zeros(2)).unwrap(), 0.0);
        let b = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), 4.0);
        assert!(matches!(
            inner_product(&a, &i3),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn symmetric_access() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 2, 5.0);
        assert_eq!(m.get(2, 0), 5.0);
        assert_eq!(m.get(0, 2), 5.0);
    }

    #[test]
    fn from_rows_rejects_asymmetry_and_nan() {
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]);
        assert!(matches!(r, Err(Error::Asymmetric { .. })));
        let r = SymMatrix::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]]);
        assert_eq!(r, Err(Error::NonFinite));
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0]]);
        assert!(matches!(r, Err(Error::DimensionMismatch(..))));
    }

    #[test]
    fn symmetrize_examples() {
        let d = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let s = symmetrize(&d).unwrap();
        assert_eq!(s, SymMatrix::from_rows(&[vec![1.5, 0.0], vec![0.0, 1.5]]).unwrap());

        let fixed = SymMatrix::two_value(4, 2.0, 0.3);
        assert_eq!(symmetrize(&fixed).unwrap(), fixed);

        let s = SymMatrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![2.0, 1.0, 4.0],
            vec![0.0, 4.0, 1.0],
        ])
        .unwrap();
        assert_eq!(symmetrize(&s).unwrap(), SymMatrix::two_value(3, 1.0, 2.0));
    }

    #[test]
    fn moment_pair_examples() {
        assert_eq!(
            moment_pair(&SymMatrix::identity(5)).unwrap(),
            MomentPair::new(0.0, 1.0)
        );
        assert_eq!(
            moment_pair(&SymMatrix::scaled_identity(3, 2.5)).unwrap(),
            MomentPair::new(0.0, 2.5)
        );
        let s = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(moment_pair(&s).unwrap(), MomentPair::new(1.0, 3.0));
        assert!(moment_pair(&SymMatrix::identity(1)).is_err());
    }

    #[test]
    fn pair_pd_conditions() {
        assert!(MomentPair::new(0.5, 1.0).is_positive_definite(2));
        assert!(!MomentPair::new(-1.0, 1.0).is_positive_definite(2));
        // a > -(n-1) b fails for n = 5 at b = -0.3
        assert!(!MomentPair::new(-0.3, 1.0).is_positive_definite(5));
        assert!(MomentPair::new(-0.3, 1.0).is_positive_definite(4));
    }
}
