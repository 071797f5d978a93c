//! Fare-free transit zone design on a linear bimodal corridor, and the timing
//! of fare-free activation under stochastic demand.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It is split
//! along the lines of the model:
//!
//! - [`corridor`]: demand density, generalized costs, logit split, elastic demand
//! - [`welfare`]: user surplus, operator costs, stage welfare and its affine form
//! - [`equity`]: group surpluses, Gini index, Lorenz curve, benefit index
//! - [`search`]: grid search for frequency, zone length and benefit-optimal zones
//! - [`demand`]: geometric Brownian motion calibration and simulation
//! - [`options`]: switching thresholds, value functions and a dynamic-programming check
//! - [`policy`]: monthly evaluation of switching policies on demand paths
//!
//! [`quadrature`] holds the adaptive Gauss–Kronrod integrator every spatial
//! integral goes through.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corridor;
pub mod demand;
pub mod equity;
mod error;
pub mod options;
pub mod policy;
pub mod quadrature;
pub mod search;
pub mod welfare;

pub use error::{Error, Result};

/// Standard normal cumulative distribution function.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}
