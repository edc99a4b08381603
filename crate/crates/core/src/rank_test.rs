//! Bootstrap test of Hermite rank one (normality of block means) for
//! long-memory series.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block_estimators::{block_means, BlockKind, BlockScheme};
use crate::block_selection::{local_whittle, whittle_bandwidth};
use crate::error::{parameter, Error, Result};
use crate::lrd_sim::{simulate_gaussian, CovarianceModel, GaussianSampler, TimeSeries};
use crate::numerics::rng::{derive_seed, stream_rng};
use crate::numerics::special::normal_cdf;

/// Goodness-of-fit statistic applied to the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GofStatistic {
    AndersonDarling,
    KolmogorovSmirnov,
}

impl GofStatistic {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ad" | "anderson-darling" => Ok(GofStatistic::AndersonDarling),
            "ks" | "kolmogorov-smirnov" => Ok(GofStatistic::KolmogorovSmirnov),
            other => Err(Error::Config(format!("unknown statistic '{other}'"))),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            GofStatistic::AndersonDarling => "AD",
            GofStatistic::KolmogorovSmirnov => "KS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTestConfig {
    /// Block length; `None` means `floor(sqrt(n))`.
    pub block_length: Option<usize>,
    pub kind: BlockKind,
    pub resamples: usize,
    pub significance: f64,
    pub statistic: GofStatistic,
    /// Whittle bandwidth `floor(n^whittle_exponent)`.
    pub whittle_exponent: f64,
    /// Uses this Hurst index for the bootstrap instead of estimating it.
    pub hurst_override: Option<f64>,
    pub seed: u64,
}

impl Default for RankTestConfig {
    fn default() -> Self {
        Self {
            block_length: None,
            kind: BlockKind::Overlapping,
            resamples: 200,
            significance: 0.05,
            statistic: GofStatistic::AndersonDarling,
            whittle_exponent: 0.7,
            hurst_override: None,
            seed: 0,
        }
    }
}

impl RankTestConfig {
    pub fn block_length_for(&self, n: usize) -> usize {
        self.block_length
            .unwrap_or_else(|| (n as f64).sqrt().floor() as usize)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let ell = self.block_length_for(n);
        if ell < 2 {
            return Err(Error::Config(format!("block length {ell} must be at least 2")));
        }
        let b = self.kind.block_count(n, ell);
        if b < 8 {
            return Err(Error::InsufficientBlocks(b));
        }
        if self.resamples == 0 {
            return Err(Error::Config("at least one resample is required".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Config("significance must lie in (0, 1)".into()));
        }
        if let Some(h) = self.hurst_override {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::Config(format!("Hurst index {h} not in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTestResult {
    pub statistic: f64,
    pub quantile: f64,
    pub reject: bool,
    pub alpha_m: f64,
    pub hurst: f64,
    /// The memory estimate hit its clamp.
    pub hurst_at_boundary: bool,
    /// Some observed residual was exactly 0 or 1 and was moved inside.
    pub residuals_clamped: bool,
    pub block_length: usize,
    pub bootstrap: Vec<f64>,
}

/// A statistic value plus whether residuals had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    pub clamped: bool,
}

/// `Phi((W_i - mean W) / S_W)` for the block means `W_i`.
pub fn block_residuals(series: &[f64], ell: usize, kind: BlockKind) -> Result<Vec<f64>> {
    let w = block_means(series, BlockScheme::new(kind, ell))?;
    let b = w.len();
    if b < 2 {
        return Err(Error::InsufficientBlocks(b));
    }
    let mean = w.iter().sum::<f64>() / b as f64;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt();
    if !(sd > 0.0) || sd <= 1e-14 * mean.abs() {
        return Err(Error::DegenerateInput("block means have zero variance".into()));
    }
    Ok(w.iter().map(|v| normal_cdf((v - mean) / sd)).collect())
}

fn check_residuals(residuals: &[f64]) -> Result<()> {
    if residuals.is_empty() {
        return Err(parameter("no residuals"));
    }
    if residuals.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(parameter("residuals must lie in [0, 1]"));
    }
    Ok(())
}

/// Anderson–Darling distance of the residuals from the uniform law.
pub fn anderson_darling(residuals: &[f64]) -> Result<StatisticValue> {
    check_residuals(residuals)?;
    let eps = f64::EPSILON;
    let mut clamped = false;
    let mut r: Vec<f64> = residuals
        .iter()
        .map(|&x| {
            let y = x.clamp(eps, 1.0 - eps);
            clamped |= y != x;
            y
        })
        .collect();
    r.sort_by(|a, b| a.total_cmp(b));
    let b = r.len();
    let bf = b as f64;
    let s: f64 = (0..b)
        .map(|i| (2 * i + 1) as f64 * (r[i].ln() + (-r[b - 1 - i]).ln_1p()))
        .sum();
    Ok(StatisticValue {
        value: -bf - s / bf,
        clamped,
    })
}

/// Kolmogorov–Smirnov distance of the residuals from the uniform law.
pub fn ks_statistic(residuals: &[f64]) -> Result<f64> {
    check_residuals(residuals)?;
    let mut r = residuals.to_vec();
    r.sort_by(|a, b| a.total_cmp(b));
    let bf = r.len() as f64;
    Ok(r.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / bf - x).max(x - i as f64 / bf))
        .fold(0.0, f64::max))
}

fn statistic_value(series: &[f64], ell: usize, kind: BlockKind, stat: GofStatistic) -> Result<StatisticValue> {
    let r = block_residuals(series, ell, kind)?;
    match stat {
        GofStatistic::AndersonDarling => anderson_darling(&r),
        GofStatistic::KolmogorovSmirnov => Ok(StatisticValue {
            value: ks_statistic(&r)?,
            clamped: false,
        }),
    }
}

/// Increments `B_H(j/n) - B_H((j-1)/n)` of a fractional Brownian motion path.
pub fn fbm_increments(n: usize, hurst: f64, seed: u64) -> Result<TimeSeries> {
    let model = CovarianceModel::fgn_increments(hurst)?;
    let z = simulate_gaussian(&model, n, seed)?;
    let scale = (n as f64).powf(-hurst);
    TimeSeries::with_seed(z.values().iter().map(|v| v * scale).collect(), Some(seed))
}

/// The `ceil((1 - significance) M)`-th order statistic of the bootstrap values.
pub fn bootstrap_quantile(values: &[f64], significance: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(parameter("no bootstrap values"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = ((1.0 - significance) * v.len() as f64 - 1e-9).ceil() as usize;
    Ok(v[k.clamp(1, v.len()) - 1])
}

/// Runs the test; bootstrap replicate `k` uses `fbm_increments` with seed
/// `derive_seed(config.seed, k)`.
pub fn rank_test(series: &[f64], config: &RankTestConfig) -> Result<RankTestResult> {
    let n = series.len();
    config.validate(n)?;
    let ell = config.block_length_for(n);
    let observed = statistic_value(series, ell, config.kind, config.statistic)?;
    let (alpha_m, hurst_at_boundary) = match config.hurst_override {
        Some(h) => (2.0 - 2.0 * h, false),
        None => {
            let w = local_whittle(series, whittle_bandwidth(n, config.whittle_exponent))?;
            (w.alpha_m, w.at_boundary)
        }
    };
    let hurst = 1.0 - alpha_m / 2.0;
    // fGn scale is irrelevant to the location-scale invariant statistic, so the
    // unit-variance sampler stands in for the increments at step 1/n.
    let sampler = GaussianSampler::new(&CovarianceModel::fgn_increments(hurst)?, n)?;
    let bootstrap: Vec<f64> = (0..config.resamples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(derive_seed(config.seed, k), 0);
            let x = sampler.sample(&mut rng);
            statistic_value(&x, ell, config.kind, config.statistic).map(|s| s.value)
        })
        .collect::<Result<_>>()?;
    let quantile = bootstrap_quantile(&bootstrap, config.significance)?;
    Ok(RankTestResult {
        statistic: observed.value,
        quantile,
        reject: observed.value > quantile,
        alpha_m,
        hurst,
        hurst_at_boundary,
        residuals_clamped: observed.clamped,
        block_length: ell,
        bootstrap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anderson_darling_two_points() {
        let a = anderson_darling(&[0.75, 0.25]).unwrap();
        let expected = -2.0 - 0.5 * (0.0625f64.ln() + 3.0 * 0.5625f64.ln());
        assert!((a.value - expected).abs() < 1e-14);
        assert!((a.value - 0.2494).abs() < 1e-4);
        assert!(!a.clamped);
        assert!(anderson_darling(&[0.0, 0.5]).unwrap().clamped);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.5]).unwrap(), 0.5);
        let b = 20;
        let grid: Vec<f64> = (0..b).map(|i| (i as f64 + 0.5) / b as f64).collect();
        assert!((ks_statistic(&grid).unwrap() - 0.5 / b as f64).abs() < 1e-15);
    }

    #[test]
    fn residual_hand_example() {
        let x: Vec<f64> = (1..=8).map(f64::from).collect();
        let r = block_residuals(&x, 2, BlockKind::NonOverlapping).unwrap();
        // W = 1.5, 3.5, 5.5, 7.5; mean 4.5; sd sqrt(20/3).
        let sd = (20.0f64 / 3.0).sqrt();
        for (ri, w) in r.iter().zip([1.5, 3.5, 5.5, 7.5]) {
            assert!((ri - normal_cdf((w - 4.5) / sd)).abs() < 1e-15);
        }
        assert!(matches!(
            block_residuals(&[2.0; 10], 2, BlockKind::NonOverlapping),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn quantile_order_statistic() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(bootstrap_quantile(&v, 0.05).unwrap(), 190.0);
        assert_eq!(bootstrap_quantile(&v, 0.5).unwrap(), 100.0);
    }

    #[test]
    fn config_checks() {
        let c = RankTestConfig::default();
        assert!(c.validate(100).is_ok());
        assert!(matches!(
            RankTestConfig {
                kind: BlockKind::NonOverlapping,
                ..c
            }
            .validate(49),
            Err(Error::InsufficientBlocks(7))
        ));
    }
}
