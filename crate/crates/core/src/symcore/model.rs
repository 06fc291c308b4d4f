use super::{Cholesky, SymMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Unrestricted,
    Equicorrelation,
    TridiagEquicorrelation,
    Custom,
}

/// A zero-diagonal symmetric basis element, stored as its strictly upper
/// triangular nonzeros `(i, j, value)` with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisElement {
    entries: Vec<(usize, usize, f64)>,
}

impl BasisElement {
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `⟨A, U⟩ = 2 Σ_{i<j} U_ij A_ij`.
    pub fn pair(&self, a: &SymMatrix) -> f64 {
        2.0 * self.entries.iter().map(|&(i, j, u)| u * a.get(i, j)).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        (2.0 * self.entries.iter().map(|e| e.2 * e.2).sum::<f64>()).sqrt()
    }

    pub fn to_matrix(&self, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for &(i, j, u) in &self.entries {
            m.set(i, j, u);
        }
        m
    }
}

/// Linear correlation model `(I_n + span{U_1..U_k}) ∩ S⁺`.
#[derive(Clone, Debug)]
pub struct CorrelationModel {
    n: usize,
    kind: ModelKind,
    basis: Vec<BasisElement>,
    norms: Vec<f64>,
    // Cholesky of the Gram matrix for non-orthogonal (custom) bases.
    gram: Option<Cholesky>,
}

/// Least-squares fit of a symmetric matrix by the model's linear span.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coefficients: Vec<f64>,
    /// `‖V − Σ c_i U_i‖_F`.
    pub residual: f64,
}

/// Normalized Gram determinant below which a custom basis is rejected.
const GRAM_DET_MIN: f64 = 1e-10;

impl CorrelationModel {
    /// The full model: one basis element `E_ij + E_ji` per pair `i < j`.
    pub fn unrestricted(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                basis.push(BasisElement {
                    entries: vec![(i, j, 1.0)],
                });
            }
        }
        Self::from_orthogonal(n, ModelKind::Unrestricted, basis)
    }

    /// `span{11ᵀ − I}`.
    pub fn equicorrelation(n: usize) -> Self {
        let entries = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0)))
            .collect();
        Self::from_orthogonal(n, ModelKind::Equicorrelation, vec![BasisElement { entries }])
    }

    /// Span of the first off-diagonal indicator.
    pub fn tridiag_equicorrelation(n: usize) -> Self {
        let entries = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1.0)).collect();
        Self::from_orthogonal(
            n,
            ModelKind::TridiagEquicorrelation,
            vec![BasisElement { entries }],
        )
    }

    fn from_orthogonal(n: usize, kind: ModelKind, basis: Vec<BasisElement>) -> Self {
        let norms = basis.iter().map(BasisElement::norm).collect();
        Self {
            n,
            kind,
            basis,
            norms,
            gram: None,
        }
    }

    /// A model spanned by arbitrary zero-diagonal symmetric matrices. The
    /// basis must be linearly independent.
    pub fn custom(n: usize, basis: &[SymMatrix]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBasis("dimension must be positive".into()));
        }
        let mut elements = Vec::with_capacity(basis.len());
        for (k, u) in basis.iter().enumerate() {
            if u.n() != n {
                return Err(Error::DimensionMismatch(n, u.n()));
            }
            u.ensure_finite()?;
            if (0..n).any(|i| u.get(i, i) != 0.0) {
                return Err(Error::InvalidBasis(format!(
                    "basis element {k} has a nonzero diagonal"
                )));
            }
            let entries: Vec<_> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .filter_map(|(i, j)| {
                    let v = u.get(i, j);
                    (v != 0.0).then_some((i, j, v))
                })
                .collect();
            if entries.is_empty() {
                return Err(Error::InvalidBasis(format!("basis element {k} is zero")));
            }
            elements.push(BasisElement { entries });
        }
        let k = elements.len();
        let norms: Vec<f64> = elements.iter().map(BasisElement::norm).collect();
        let mats: Vec<SymMatrix> = elements.iter().map(|e| e.to_matrix(n)).collect();
        let mut gram = SymMatrix::zeros(k);
        for p in 0..k {
            for q in 0..=p {
                gram.set(p, q, elements[q].pair(&mats[p]));
            }
        }
        let normalized = SymMatrix::from_fn(k, |p, q| gram.get(p, q) / (norms[p] * norms[q]));
        let det = Cholesky::new(&normalized).map(|c| c.log_det().exp()).unwrap_or(0.0);
        if !(det > GRAM_DET_MIN) {
            return Err(Error::InvalidBasis(format!(
                "basis is linearly dependent (normalized Gram determinant {det:e})"
            )));
        }
        let gram = Cholesky::new(&gram)
            .ok_or_else(|| Error::InvalidBasis("Gram matrix not positive definite".into()))?;
        Ok(Self {
            n,
            kind: ModelKind::Custom,
            basis: elements,
            norms,
            gram: Some(gram),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Number of basis elements `k`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn basis_matrix(&self, k: usize) -> SymMatrix {
        self.basis[k].to_matrix(self.n)
    }

    pub fn basis_norms(&self) -> &[f64] {
        &self.norms
    }

    /// `I_n + Σ c_i U_i`.
    pub fn point(&self, coefficients: &[f64]) -> SymMatrix {
        assert_eq!(coefficients.len(), self.dim(), "coefficient count");
        let mut m = SymMatrix::identity(self.n);
        self.add_combination(&mut m, coefficients);
        m
    }

    /// `Σ c_i U_i`.
    pub fn combination(&self, coefficients: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n);
        self.add_combination(&mut m, coefficients);
        m
    }

    fn add_combination(&self, m: &mut SymMatrix, coefficients: &[f64]) {
        for (e, &c) in self.basis.iter().zip(coefficients) {
            for &(i, j, u) in &e.entries {
                m.set(i, j, m.get(i, j) + c * u);
            }
        }
    }

    /// `⟨A, U_i⟩` for every basis element.
    pub fn pairings(&self, a: &SymMatrix) -> Vec<f64> {
        self.basis.iter().map(|e| e.pair(a)).collect()
    }

    /// Orthogonal projection of `v` onto `span{U_i}`.
    pub fn project(&self, v: &SymMatrix) -> Result<Projection> {
        if v.n() != self.n {
            return Err(Error::DimensionMismatch(self.n, v.n()));
        }
        v.ensure_finite()?;
        let rhs = self.pairings(v);
        let coefficients = match &self.gram {
            Some(g) => g.solve(&rhs),
            None => rhs
                .iter()
                .zip(&self.norms)
                .map(|(r, nrm)| r / (nrm * nrm))
                .collect(),
        };
        let residual = v.sub(&self.combination(&coefficients)).frobenius_norm();
        Ok(Projection {
            coefficients,
            residual,
        })
    }

    /// Coefficients of `sigma − I` together with its distance from the span.
    pub fn coordinates(&self, sigma: &SymMatrix) -> Result<Projection> {
        self.project(&sigma.sub(&SymMatrix::identity(sigma.n())))
    }
}
