//! Correlation matrix estimation under three losses.
//!
//! The entropy loss `I(S‖Σ)` (negative Gaussian log-likelihood up to constants),
//! Stein's loss `I(Σ‖S)` and the symmetrized Stein's loss
//! `½(I(S‖Σ) + I(Σ‖S))` are minimized over linear correlation models
//! `(I + span{U_1..U_k}) ∩ S⁺`.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`symcore`] | packed symmetric matrices, Cholesky, models, symmetrization |
//! | [`losses`] | divergence, the three losses, gradients, critical residuals |
//! | [`polyroots`] | real roots of low-degree polynomials |
//! | [`bivariate`] | critical cubic, discriminants and regions for `n = 2` |
//! | [`equicorr`] | closed forms for the equicorrelation model |
//! | [`tridiag`] | tridiagonal equicorrelation determinants and dual polynomial |
//! | [`optimize`] | Stein dual solver, Newton on model coefficients, convexity tests |
//! | [`experiments`] | `S = tI` census and Monte Carlo discriminant studies |

use thiserror::Error;

pub mod bivariate;
pub mod equicorr;
pub mod experiments;
pub mod losses;
pub mod optimize;
pub mod polyroots;
pub mod symcore;
pub mod tridiag;

pub use losses::{CriticalPoint, LossKind};
pub use polyroots::{Poly, RootSet};
pub use symcore::{CorrelationModel, ModelKind, MomentPair, SymMatrix};

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is singular to working precision (rcond = {0:e})")]
    Singular(f64),

    #[error("matrix is not symmetric: |A[{i}][{j}] - A[{j}][{i}]| = {gap:e}")]
    Asymmetric { i: usize, j: usize, gap: f64 },

    #[error("moment pair (b = {b}, a = {a}) does not come from a positive definite matrix for n = {n}")]
    NonPositivePair { n: usize, b: f64, a: f64 },

    #[error("invalid model basis: {0}")]
    InvalidBasis(String),

    #[error("point is not in the model's affine space (distance {0:e})")]
    OutsideModel(f64),

    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,

    #[error("polynomial degree {0} exceeds the supported maximum of 64")]
    DegreeTooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no root of the critical polynomial lies in the positive definite interval")]
    Infeasible,

    #[error("eigenvalue computation failed to converge")]
    EigenFailure,

    #[error("solver did not converge in {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
