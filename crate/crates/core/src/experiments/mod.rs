//! Reproducible experiments.
//!
//! * [`census`]: the entropy critical points of the full `3 × 3` model at
//!   `S = tI₃`, built from their closed forms and checked one by one.
//! * [`monte_carlo`]: Gaussian sampling from an equicorrelation population,
//!   the probability that the sample moments fall where the entropy loss
//!   has a single critical point, and the spread of those moments.

pub mod census;
pub mod monte_carlo;

pub use census::{census_mle_identity_threshold, census_ti, CensusGroups, CensusResult, IdentityThresholds};
pub use monte_carlo::{
    distance_distribution, mc_discriminant_probability, population_discriminant, sample_equicorr_gaussian,
    sample_equicorr_gaussian_with, CovarianceDivisor, MonteCarloResult,
};
