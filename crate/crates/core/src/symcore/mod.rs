//! Symmetric-matrix algebra shared by every other module.
//!
//! [`SymMatrix`] stores the lower triangle only, so `S`, `Σ`, `K = Σ⁻¹` and
//! `W = S⁻¹` are symmetric by construction. Positive definiteness is decided
//! by Cholesky with a relative pivot floor of `1e-12 · max(diag)`.

mod factor;
mod matrix;
mod model;

pub use factor::{eigenvalues, inverse, is_positive_definite, log_det_pd, Cholesky, PD_PIVOT_TOL, RCOND_MIN};
pub use matrix::{inner_product, moment_pair, symmetrize, MomentPair, SymMatrix};
pub(crate) use matrix::inner_product_unchecked;
pub use model::{BasisElement, CorrelationModel, ModelKind, Projection};

/// Orthogonal projection of `v` onto the model span.
pub fn project_onto_model(v: &SymMatrix, model: &CorrelationModel) -> crate::Result<Projection> {
    model.project(v)
}
