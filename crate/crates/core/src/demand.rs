//! Geometric Brownian motion for the CBD demand density: calibration from a
//! monthly series, exact-discretization path simulation and the analytic mean.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, invalid};
use crate::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Monthly GBM dynamics of the CBD demand density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    /// Drift per month.
    pub growth: f64,
    /// Volatility per month.
    pub volatility: f64,
    /// Discount rate per month.
    pub discount: f64,
    /// Demand density at month zero (pax/mile/day).
    pub initial: f64,
}

impl GbmParams {
    /// eta = 0.0116, sigma = 0.1347, k = 0.02, Q0 = 1500.
    pub fn baseline() -> Self {
        Self {
            growth: 0.0116,
            volatility: 0.1347,
            discount: 0.02,
            initial: 1500.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.growth.is_finite() {
            return Err(domain("eta", self.growth, "finite"));
        }
        if !(self.volatility >= 0.0 && self.volatility.is_finite()) {
            return Err(domain("sigma", self.volatility, "sigma >= 0"));
        }
        if !self.discount.is_finite() {
            return Err(domain("k", self.discount, "finite"));
        }
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(domain("Q0", self.initial, "Q0 > 0"));
        }
        Ok(())
    }

    /// `Q0 * exp(eta * t)`.
    pub fn expected_demand(&self, months: f64) -> f64 {
        self.initial * libm::exp(self.growth * months)
    }
}

/// Drift and volatility estimated from log returns, with 95% intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub growth: f64,
    pub volatility: f64,
    pub growth_interval: (f64, f64),
    pub volatility_interval: (f64, f64),
    /// Number of log returns used.
    pub returns: usize,
}

impl Calibration {
    /// GBM parameters using the estimates and the given discount rate and start value.
    pub fn params(&self, discount: f64, initial: f64) -> GbmParams {
        GbmParams {
            growth: self.growth,
            volatility: self.volatility,
            discount,
            initial,
        }
    }
}

/// Minimum series length accepted by [`calibrate`].
pub const MIN_OBSERVATIONS: usize = 13;

/// Fits `sigma` as the sample standard deviation of monthly log returns and
/// `eta = mean + sigma^2/2`.
///
/// Intervals are normal approximations: the drift uses
/// `Var = s^2/m + s^4/(2(m-1))`, the volatility `s / sqrt(2(m-1))`.
pub fn calibrate(series: &[f64]) -> Result<Calibration> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(invalid("series", "need at least 13 monthly observations"));
    }
    if let Some(&bad) = series.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(domain("ridership", bad, "strictly positive"));
    }
    let returns: Vec<f64> = series.windows(2).map(|w| libm::log(w[1] / w[0])).collect();
    let m = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / m;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (m - 1.0);
    let s = libm::sqrt(var);
    let growth = mean + 0.5 * var;
    let growth_se = libm::sqrt(var / m + var * var / (2.0 * (m - 1.0)));
    let vol_se = s / libm::sqrt(2.0 * (m - 1.0));
    Ok(Calibration {
        growth,
        volatility: s,
        growth_interval: (growth - Z_95 * growth_se, growth + Z_95 * growth_se),
        volatility_interval: ((s - Z_95 * vol_se).max(0.0), s + Z_95 * vol_se),
        returns: returns.len(),
    })
}

/// One simulated monthly demand path, `values[t]` for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandPath {
    pub seed: u64,
    pub index: u64,
    pub values: Vec<f64>,
}

impl DemandPath {
    pub fn months(&self) -> usize {
        self.values.len() - 1
    }
}

/// Simulates path `index` of the family keyed by `seed`. Each path draws from
/// its own ChaCha stream, so a path does not depend on how many others exist.
pub fn simulate_path(params: &GbmParams, months: usize, seed: u64, index: u64) -> DemandPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let drift = params.growth - 0.5 * params.volatility * params.volatility;
    let mut values = Vec::with_capacity(months + 1);
    let mut q = params.initial;
    values.push(q);
    for _ in 0..months {
        let eps: f64 = rng.sample(StandardNormal);
        q *= libm::exp(drift + params.volatility * eps);
        values.push(q);
    }
    DemandPath {
        seed,
        index,
        values,
    }
}

/// Simulates `n_paths` independent paths of `months` steps.
pub fn simulate_paths(
    params: &GbmParams,
    months: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<DemandPath>> {
    params.validate()?;
    if months == 0 {
        return Err(invalid("months", "horizon must be at least one month"));
    }
    if n_paths == 0 {
        return Err(invalid("paths", "need at least one path"));
    }
    Ok((0..n_paths as u64)
        .map(|i| simulate_path(params, months, seed, i))
        .collect())
}

/// Pointwise mean of equally long paths.
pub fn mean_path(paths: &[DemandPath]) -> Result<Vec<f64>> {
    let first = paths
        .first()
        .ok_or(Error::Undefined("mean of zero paths"))?;
    let len = first.values.len();
    if paths.iter().any(|p| p.values.len() != len) {
        return Err(invalid("paths", "all paths must share one horizon"));
    }
    let n = paths.len() as f64;
    Ok((0..len)
        .map(|t| paths.iter().map(|p| p.values[t]).sum::<f64>() / n)
        .collect())
}
