//! Overlapping block bootstrap confidence intervals under long memory.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::block_estimators::{block_means, BlockScheme};
use crate::block_selection::{local_whittle, whittle_bandwidth};
use crate::error::{parameter, Error, Result};
use crate::functionals::Functional;
use crate::numerics::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub level: f64,
    pub resamples: usize,
    pub whittle_exponent: f64,
    /// Fixes the scaling exponent instead of estimating it.
    pub alpha_m: Option<f64>,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            level: 0.95,
            resamples: 200,
            whittle_exponent: 0.7,
            alpha_m: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Bootstrap quantile of the scaled deviation.
    pub quantile: f64,
    pub alpha_m: f64,
    pub block_length: usize,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Interval `T_n -/+ q / n^{alpha_m/2}` where `q` is the bootstrap quantile of
/// `b^{1/2} l^{alpha_m/2} |mean* - E* mean*|` over `b = floor(n/l)` resampled
/// overlapping blocks of the influence values.
///
/// A series whose influence values are constant gives a zero-width interval;
/// no memory estimate is attempted and `alpha_m` is reported as 1.
pub fn bootstrap_ci(
    series: &[f64],
    functional: &Functional,
    ell: usize,
    config: &BootstrapConfig,
) -> Result<ConfidenceInterval> {
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(parameter("confidence level must lie in (0, 1)"));
    }
    if config.resamples < 50 {
        return Err(parameter("at least 50 bootstrap resamples are required"));
    }
    let n = series.len();
    if ell == 0 || ell > n {
        return Err(Error::BlockLength { ell, n });
    }
    let estimate = functional.evaluate(series)?;
    let x = functional.influence_estimates(series)?;
    let means = block_means(&x, BlockScheme::overlapping(ell))?;
    let first = means[0];
    if means.iter().all(|&m| m == first) {
        return Ok(ConfidenceInterval {
            estimate,
            lower: estimate,
            upper: estimate,
            quantile: 0.0,
            alpha_m: 1.0,
            block_length: ell,
        });
    }
    let alpha_m = match config.alpha_m {
        Some(a) => a,
        None => local_whittle(&x, whittle_bandwidth(n, config.whittle_exponent))?.alpha_m,
    };
    let centre = means.iter().sum::<f64>() / means.len() as f64;
    let b = n / ell;
    let scale = (b as f64).sqrt() * (ell as f64).powf(alpha_m / 2.0);
    let mut rng = stream_rng(config.seed, 0);
    let mut deltas: Vec<f64> = (0..config.resamples)
        .map(|_| {
            let s: f64 = (0..b).map(|_| means[rng.random_range(0..means.len())]).sum();
            scale * (s / b as f64 - centre).abs()
        })
        .collect();
    deltas.sort_by(|a, b| a.total_cmp(b));
    let k = (config.level * deltas.len() as f64 - 1e-9).ceil() as usize;
    let quantile = deltas[k.clamp(1, deltas.len()) - 1];
    let half = quantile / (n as f64).powf(alpha_m / 2.0);
    Ok(ConfidenceInterval {
        estimate,
        lower: estimate - half,
        upper: estimate + half,
        quantile,
        alpha_m,
        block_length: ell,
    })
}
