//! Sampling from `N(0, (1 − ρ*)I + ρ*11ᵀ)` and the behaviour of the
//! sample moment pair `(b, a)`.
//!
//! Replicate `i` draws from its own ChaCha8 stream `(seed, i)`, so results
//! do not depend on thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::equicorr::{discriminant_fn, pd_lower};
use crate::symcore::{moment_pair, MomentPair, SymMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CovarianceDivisor {
    /// Maximum-likelihood convention.
    #[default]
    SampleSize,
    SampleSizeMinusOne,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub n: usize,
    pub rho_star: f64,
    pub sample_size: usize,
    pub replicates: usize,
    /// Fraction of replicates with `Δ_{f,n}(b, a) < 0`.
    pub prob_single_critical: f64,
    /// Binomial standard error of that fraction.
    pub stderr: f64,
    pub seed: u64,
}

fn validate(n: usize, rho_star: f64, sample_size: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if !(rho_star > pd_lower(n) && rho_star < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho* = {rho_star} is outside ({}, 1) for n = {n}",
            pd_lower(n)
        )));
    }
    if sample_size < 2 {
        return Err(Error::InvalidArgument(format!("sample size must be at least 2, got {sample_size}")));
    }
    Ok(())
}

fn population_factor(n: usize, rho_star: f64) -> Result<DMatrix<f64>> {
    SymMatrix::equicorrelation(n, rho_star)
        .to_dense()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

fn draw(factor: &DMatrix<f64>, sample_size: usize, divisor: CovarianceDivisor, seed: u64, stream: u64) -> SymMatrix {
    let n = factor.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut z = DVector::<f64>::zeros(n);
    for _ in 0..sample_size {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let x = factor * &z;
        acc.syger(1.0, &x, &x, 1.0);
    }
    let denom = match divisor {
        CovarianceDivisor::SampleSize => sample_size,
        CovarianceDivisor::SampleSizeMinusOne => sample_size - 1,
    } as f64;
    SymMatrix::from_fn(n, |i, j| acc[(i.max(j), i.min(j))] / denom)
}

/// Sample covariance `(1/N) Σ xₖxₖᵀ` of `N` zero-mean Gaussian vectors.
/// With `N < n` the result is singular; downstream positive definiteness
/// checks reject it.
pub fn sample_equicorr_gaussian(n: usize, rho_star: f64, sample_size: usize, seed: u64) -> Result<SymMatrix> {
    sample_equicorr_gaussian_with(n, rho_star, sample_size, seed, CovarianceDivisor::SampleSize)
}

pub fn sample_equicorr_gaussian_with(
    n: usize,
    rho_star: f64,
    sample_size: usize,
    seed: u64,
    divisor: CovarianceDivisor,
) -> Result<SymMatrix> {
    validate(n, rho_star, sample_size)?;
    Ok(draw(&population_factor(n, rho_star)?, sample_size, divisor, seed, 0))
}

fn replicate_pairs(n: usize, rho_star: f64, sample_size: usize, replicates: usize, seed: u64) -> Result<Vec<MomentPair>> {
    validate(n, rho_star, sample_size)?;
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    let factor = population_factor(n, rho_star)?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| moment_pair(&draw(&factor, sample_size, CovarianceDivisor::SampleSize, seed, i)))
        .collect()
}

pub fn mc_discriminant_probability(
    n: usize,
    rho_star: f64,
    sample_size: usize,
    replicates: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    let pairs = replicate_pairs(n, rho_star, sample_size, replicates, seed)?;
    let hits = pairs.iter().filter(|&&p| discriminant_fn(n, p) < 0.0).count();
    let prob = hits as f64 / replicates as f64;
    Ok(MonteCarloResult {
        n,
        rho_star,
        sample_size,
        replicates,
        prob_single_critical: prob,
        stderr: (prob * (1.0 - prob) / replicates as f64).sqrt(),
        seed,
    })
}

/// `‖(b, a) − (ρ*, 1)‖₂` for each replicate.
pub fn distance_distribution(
    n: usize,
    rho_star: f64,
    sample_size: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let pairs = replicate_pairs(n, rho_star, sample_size, replicates, seed)?;
    Ok(pairs.iter().map(|p| (p.b - rho_star).hypot(p.a - 1.0)).collect())
}

/// `Δ_{f,n}` at the population moments `(ρ*, 1)`, whose sign fixes the
/// large-sample classification.
pub fn population_discriminant(n: usize, rho_star: f64) -> f64 {
    discriminant_fn(n, MomentPair::new(rho_star, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        let a = sample_equicorr_gaussian(2, 0.3, 20, 42).unwrap();
        let b = sample_equicorr_gaussian(2, 0.3, 20, 42).unwrap();
        assert_eq!(a.packed(), b.packed());
        assert_ne!(a, sample_equicorr_gaussian(2, 0.3, 20, 43).unwrap());
        let r1 = mc_discriminant_probability(3, 0.2, 10, 500, 9).unwrap();
        let r2 = mc_discriminant_probability(3, 0.2, 10, 500, 9).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn large_sample_moments() {
        let n = 4;
        let size = 200_000;
        let s = sample_equicorr_gaussian(n, 0.0, size, 1).unwrap();
        let p = moment_pair(&s).unwrap();
        // Var(x²) = 2 over n·N draws; off-diagonal products have variance 1
        let se_a = (2.0 / (n * size) as f64).sqrt();
        let se_b = (1.0 / (n * (n - 1) / 2 * size) as f64).sqrt();
        assert!((p.a - 1.0).abs() < 3.0 * se_a, "{p:?}");
        assert!(p.b.abs() < 3.0 * se_b, "{p:?}");
    }

    #[test]
    fn diagonal_mean_is_unbiased() {
        let reps = 10_000;
        let pairs = replicate_pairs(3, 0.4, 5, reps, 5).unwrap();
        let mean = pairs.iter().map(|p| p.a).sum::<f64>() / reps as f64;
        let var = pairs.iter().map(|p| (p.a - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn divisor_switch() {
        let a = sample_equicorr_gaussian_with(3, 0.1, 10, 3, CovarianceDivisor::SampleSize).unwrap();
        let b = sample_equicorr_gaussian_with(3, 0.1, 10, 3, CovarianceDivisor::SampleSizeMinusOne).unwrap();
        assert!(a.scale(10.0 / 9.0).distance(&b) < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_equicorr_gaussian(3, -0.5, 10, 0).is_err());
        assert!(sample_equicorr_gaussian(3, 1.0, 10, 0).is_err());
        assert!(sample_equicorr_gaussian(3, 0.1, 1, 0).is_err());
        assert!(mc_discriminant_probability(3, 0.1, 10, 0, 0).is_err());
    }

    #[test]
    fn high_correlation_is_central() {
        let r = mc_discriminant_probability(2, 0.5, 50, 2000, 7).unwrap();
        assert!(r.prob_single_critical > 0.95, "{r:?}");
        assert!(population_discriminant(2, 0.5) < 0.0);
    }

    #[test]
    fn distances_shrink() {
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let d2 = mean(distance_distribution(2, 0.5, 20, 2000, 3).unwrap());
        let d10 = mean(distance_distribution(10, 0.5, 20, 2000, 3).unwrap());
        assert!(d10 < d2);
        let small = mean(distance_distribution(2, 0.5, 2, 2000, 3).unwrap());
        let large = mean(distance_distribution(2, 0.5, 50, 2000, 3).unwrap());
        assert!(large < small);
    }
}
