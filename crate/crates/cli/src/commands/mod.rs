pub mod classify;
pub mod degrees;
pub mod experiment;
pub mod fit;
