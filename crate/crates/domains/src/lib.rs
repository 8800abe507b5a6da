//! Benchmark POMDPs for the online planner, plus small analytic toy models
//! used as test oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod lasertag;
pub mod lightdark;
pub mod rocksample;
pub mod tag;
pub mod toy;

pub use lasertag::{LaserTag, LaserTagParams};
pub use lightdark::{LightDark, LightDarkParams};
pub use rocksample::{RockSample, RockSampleParams};
pub use tag::{Tag, TagParams};

/// Smallest proposal width used by the grid mutations.
pub const GRID_SIGMA_FLOOR: f64 = 1e-3;

pub fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
