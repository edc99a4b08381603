//! Overlapping and non-overlapping block-mean variance estimators.

use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Error, Result};
use crate::hermite::HermiteSpec;
use crate::lrd_sim::CovarianceModel;

/// Block arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    /// All `n - l + 1` contiguous windows.
    Overlapping,
    /// `floor(n / l)` disjoint blocks starting at the origin; the remainder is dropped.
    NonOverlapping,
}

impl BlockKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ol" | "overlapping" => Ok(BlockKind::Overlapping),
            "nol" | "non-overlapping" | "nonoverlapping" => Ok(BlockKind::NonOverlapping),
            other => Err(Error::Config(format!("unknown block scheme '{other}'"))),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            BlockKind::Overlapping => "OL",
            BlockKind::NonOverlapping => "NOL",
        }
    }

    /// Number of blocks of length `ell` in a series of length `n`.
    pub fn block_count(&self, n: usize, ell: usize) -> usize {
        if ell == 0 || ell > n {
            return 0;
        }
        match self {
            BlockKind::Overlapping => n - ell + 1,
            BlockKind::NonOverlapping => n / ell,
        }
    }

    /// Start index of block `i`.
    pub fn block_start(&self, i: usize, ell: usize) -> usize {
        match self {
            BlockKind::Overlapping => i,
            BlockKind::NonOverlapping => i * ell,
        }
    }
}

impl std::fmt::Display for BlockKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Block arrangement plus length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockScheme {
    pub kind: BlockKind,
    pub length: usize,
}

impl BlockScheme {
    pub fn new(kind: BlockKind, length: usize) -> Self {
        Self { kind, length }
    }

    pub fn overlapping(length: usize) -> Self {
        Self::new(BlockKind::Overlapping, length)
    }

    pub fn non_overlapping(length: usize) -> Self {
        Self::new(BlockKind::NonOverlapping, length)
    }
}

/// A scaled block variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub scheme: BlockScheme,
    pub alpha_m: f64,
    pub n: usize,
    pub blocks: usize,
}

fn check_length(n: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell > n {
        return Err(Error::BlockLength { ell, n });
    }
    Ok(())
}

/// Means of all blocks of the scheme, in order.
pub fn block_means(series: &[f64], scheme: BlockScheme) -> Result<Vec<f64>> {
    let n = series.len();
    let ell = scheme.length;
    check_length(n, ell)?;
    let center = series.iter().sum::<f64>() / n as f64;
    let lf = ell as f64;
    match scheme.kind {
        BlockKind::Overlapping => {
            // Prefix sums of the centred series keep cancellation small.
            let mut prefix = Vec::with_capacity(n + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &x in series {
                acc += x - center;
                prefix.push(acc);
            }
            Ok((0..=n - ell)
                .map(|i| center + (prefix[i + ell] - prefix[i]) / lf)
                .collect())
        }
        BlockKind::NonOverlapping => Ok(series
            .chunks_exact(ell)
            .map(|c| center + c.iter().map(|x| x - center).sum::<f64>() / lf)
            .collect()),
    }
}

/// Mean and divisor-N variance, two-pass.
pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub(crate) fn check_alpha_m(alpha_m: f64) -> Result<()> {
    if !(alpha_m > 0.0 && alpha_m <= 1.0) {
        return Err(parameter(format!("scaling exponent {alpha_m} not in (0, 1]")));
    }
    Ok(())
}

/// `l^{alpha_m}` times the empirical variance of the block means.
pub fn variance_estimator(
    series: &[f64],
    scheme: BlockScheme,
    alpha_m: f64,
) -> Result<VarianceEstimate> {
    check_alpha_m(alpha_m)?;
    let means = block_means(series, scheme)?;
    if means.len() < 2 {
        return Err(Error::InsufficientBlocks(means.len()));
    }
    let (_, var) = mean_and_variance(&means);
    Ok(VarianceEstimate {
        value: (scheme.length as f64).powf(alpha_m) * var,
        scheme,
        alpha_m,
        n: series.len(),
        blocks: means.len(),
    })
}

/// Autocovariance `r(k) = Σ_{j>=m} (J_j^2 / j!) gamma(k)^j` of the transformed
/// series, `r(0)` being the full variance.
pub fn transformed_covariances(model: &CovarianceModel, spec: &HermiteSpec, n: usize) -> Vec<f64> {
    let weights: Vec<(i32, f64)> = (spec.rank..=spec.max_order())
        .map(|j| (j as i32, spec.weight(j)))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let gam = model.covariances(n);
    gam.iter()
        .enumerate()
        .map(|(k, &g)| {
            if k == 0 {
                spec.variance
            } else {
                weights.iter().map(|&(j, w)| w * g.powi(j)).sum()
            }
        })
        .collect()
}

/// `n^{alpha_m} Var(mean of n observations)` of the transformed series.
pub fn target_variance(
    model: &CovarianceModel,
    spec: &HermiteSpec,
    n: usize,
    alpha_m: f64,
) -> Result<f64> {
    if !(alpha_m > 0.0 && alpha_m < 1.0) {
        return Err(parameter(format!("scaling exponent {alpha_m} not in (0, 1)")));
    }
    if n == 0 {
        return Err(parameter("n must be positive"));
    }
    let r = transformed_covariances(model, spec, n);
    let nf = n as f64;
    let mut s = 0.0;
    for (k, rk) in r.iter().enumerate().skip(1).rev() {
        s += (1.0 - k as f64 / nf) * rk;
    }
    Ok(nf.powf(alpha_m) * (r[0] + 2.0 * s) / nf)
}

/// Limit of the scaled variance of the mean: `(J_m^2/m!) 2 c0^m / ((1-am)(2-am))`.
pub fn limit_variance(model: &CovarianceModel, spec: &HermiteSpec) -> Result<f64> {
    let m = spec.rank;
    let am = model.alpha() * m as f64;
    if !(am > 0.0 && am < 1.0) {
        return Err(domain(format!(
            "alpha * m = {am} is not in (0, 1); the mean is not long-range dependent"
        )));
    }
    Ok(limit_variance_order(model, spec.weight(m), m))
}

/// `w 2 c0^j / ((1 - alpha j)(2 - alpha j))` for a single Hermite order `j`.
pub(crate) fn limit_variance_order(model: &CovarianceModel, weight: f64, j: usize) -> f64 {
    let aj = model.alpha() * j as f64;
    weight * 2.0 * model.scale().powi(j as i32) / ((1.0 - aj) * (2.0 - aj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_overlapping_hand_example() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let v = variance_estimator(&x, BlockScheme::non_overlapping(2), 1.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-15);
        assert_eq!(v.blocks, 2);
    }

    #[test]
    fn overlapping_means_brute_force() {
        let x = [0.3, -1.2, 4.0, 2.5, 0.0, 1.1, -0.7];
        for ell in 1..=7 {
            let m = block_means(&x, BlockScheme::overlapping(ell)).unwrap();
            assert_eq!(m.len(), 8 - ell);
            for (i, v) in m.iter().enumerate() {
                let direct: f64 = x[i..i + ell].iter().sum::<f64>() / ell as f64;
                assert!((v - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn errors() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            variance_estimator(&x, BlockScheme::overlapping(4), 0.5),
            Err(Error::BlockLength { .. })
        ));
        assert!(matches!(
            variance_estimator(&x, BlockScheme::non_overlapping(2), 0.5),
            Err(Error::InsufficientBlocks(1))
        ));
        assert!(variance_estimator(&x, BlockScheme::overlapping(1), 0.0).is_err());
    }

    #[test]
    fn limit_variance_hermite_two() {
        let model = CovarianceModel::fgn_with_alpha(0.3).unwrap();
        let spec = HermiteSpec::from_coefficients(vec![0.0, 0.0, 2.0]).unwrap();
        let c0 = model.scale();
        let expected = 2.0 * 2.0 * c0 * c0 / ((1.0 - 0.6) * (2.0 - 0.6));
        assert!((limit_variance(&model, &spec).unwrap() - expected).abs() < 1e-14);
        let spec1 = HermiteSpec::from_coefficients(vec![0.0, 1.0]).unwrap();
        let m = CovarianceModel::fgn_with_alpha(0.3).unwrap();
        // For fGn itself the scaled variance of the mean is exactly 1 at every n.
        let t = target_variance(&m, &spec1, 500, 0.3).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
    }
}
