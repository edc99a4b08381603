//! Statistical functionals, their empirical influence values and the block
//! jackknife.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::block_estimators::{check_alpha_m, variance_estimator, BlockScheme, VarianceEstimate};
use crate::error::{domain, parameter, Error, Result};
use crate::numerics::optimize::bisect;

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type VectorMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Score = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A functional `T(F)` of the marginal law, evaluated at the empirical law.
#[derive(Clone)]
pub enum Functional {
    /// `outer(mean phi_1(Y), ..., mean phi_l(Y))`.
    SmoothOfMeans {
        bases: Vec<ScalarMap>,
        outer: VectorMap,
        gradient: GradientMap,
    },
    /// Root in `theta` of `Σ psi(Y_t, theta) = 0`; `score_derivative` is the
    /// derivative with respect to `theta`.
    MEstimator {
        score: Score,
        score_derivative: Score,
        bracket: Option<(f64, f64)>,
    },
    /// `Σ_t Y_(t) J((t - 1/2)/n) / n` restricted to `lower < (t - 1/2)/n < upper`.
    LEstimator {
        weight: ScalarMap,
        lower: f64,
        upper: f64,
    },
    /// Mean of the order statistics with `lower < (t - 1/2)/n < upper`.
    TrimmedMean { lower: f64, upper: f64 },
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::SmoothOfMeans { bases, .. } => {
                write!(f, "SmoothOfMeans({} bases)", bases.len())
            }
            Functional::MEstimator { bracket, .. } => write!(f, "MEstimator({bracket:?})"),
            Functional::LEstimator { lower, upper, .. } => {
                write!(f, "LEstimator({lower}, {upper})")
            }
            Functional::TrimmedMean { lower, upper } => write!(f, "TrimmedMean({lower}, {upper})"),
        }
    }
}

impl Functional {
    /// The sample mean.
    pub fn mean() -> Self {
        Functional::SmoothOfMeans {
            bases: vec![Arc::new(|y| y)],
            outer: Arc::new(|m| m[0]),
            gradient: Arc::new(|_| vec![1.0]),
        }
    }

    /// Symmetric trimmed mean discarding a fraction `delta` in each tail.
    pub fn trimmed_mean(delta: f64) -> Result<Self> {
        Self::trimmed(delta, 1.0 - delta)
    }

    /// Trimmed mean keeping quantile levels strictly between `lower` and `upper`.
    pub fn trimmed(lower: f64, upper: f64) -> Result<Self> {
        check_trim(lower, upper)?;
        Ok(Functional::TrimmedMean { lower, upper })
    }

    /// Symmetric trimmed mean as an L-estimator with constant weight, whose
    /// influence values are the empirical version of the exact (winsorized)
    /// influence function rather than the truncated form of [`Functional::TrimmedMean`].
    pub fn trimmed_mean_exact(delta: f64) -> Result<Self> {
        let width = 1.0 - 2.0 * delta;
        Self::l_estimator(Arc::new(move |_| 1.0 / width), delta, 1.0 - delta)
    }

    /// L-estimator with bounded weight function `weight` on `(lower, upper)`.
    pub fn l_estimator(weight: ScalarMap, lower: f64, upper: f64) -> Result<Self> {
        check_trim(lower, upper)?;
        Ok(Functional::LEstimator {
            weight,
            lower,
            upper,
        })
    }

    /// Huber location M-estimator with threshold `c`.
    pub fn huber(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(parameter("Huber threshold must be positive"));
        }
        Ok(Functional::MEstimator {
            score: Arc::new(move |y, t| (y - t).clamp(-c, c)),
            score_derivative: Arc::new(move |y, t| if (y - t).abs() < c { -1.0 } else { 0.0 }),
            bracket: None,
        })
    }

    /// Parses `mean`, `trimmed:<delta>`, `trimmed-exact:<delta>` or `huber:<c>`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let (name, arg) = match t.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (t.as_str(), None),
        };
        let num = |v: Option<&str>| -> Result<f64> {
            v.ok_or_else(|| Error::Config(format!("'{s}' needs a numeric argument")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number in '{s}': {e}")))
        };
        match name {
            "mean" => Ok(Self::mean()),
            "trimmed" => Self::trimmed_mean(num(arg)?),
            "trimmed-exact" => Self::trimmed_mean_exact(num(arg)?),
            "huber" => Self::huber(num(arg)?),
            _ => Err(Error::Config(format!("unknown functional '{s}'"))),
        }
    }

    /// `T(F_n)`.
    pub fn evaluate(&self, sample: &[f64]) -> Result<f64> {
        if sample.len() < 2 {
            return Err(parameter("sample must contain at least 2 values"));
        }
        match self {
            Functional::SmoothOfMeans { bases, outer, .. } => Ok(outer(&base_means(bases, sample))),
            Functional::MEstimator {
                score, bracket, ..
            } => m_estimate(score.as_ref(), *bracket, sample),
            Functional::LEstimator {
                weight,
                lower,
                upper,
            } => {
                let sorted = sorted(sample);
                let n = sorted.len() as f64;
                let (lo, hi) = kept_ranks(sorted.len(), *lower, *upper)?;
                Ok((lo..=hi)
                    .map(|t| sorted[t] * weight((t as f64 + 0.5) / n))
                    .sum::<f64>()
                    / n)
            }
            Functional::TrimmedMean { lower, upper } => {
                let sorted = sorted(sample);
                let (lo, hi) = kept_ranks(sorted.len(), *lower, *upper)?;
                Ok(sorted[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64)
            }
        }
    }

    /// Empirical influence values `IF(Y_t, F_n)`.
    pub fn influence_estimates(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() < 2 {
            return Err(parameter("sample must contain at least 2 values"));
        }
        match self {
            Functional::SmoothOfMeans {
                bases, gradient, ..
            } => {
                let means = base_means(bases, sample);
                let grad = gradient(&means);
                Ok(sample
                    .iter()
                    .map(|&y| {
                        bases
                            .iter()
                            .zip(&grad)
                            .zip(&means)
                            .map(|((phi, g), m)| g * (phi(y) - m))
                            .sum()
                    })
                    .collect())
            }
            Functional::MEstimator {
                score,
                score_derivative,
                bracket,
            } => {
                let t = m_estimate(score.as_ref(), *bracket, sample)?;
                let slope =
                    sample.iter().map(|&y| score_derivative(y, t)).sum::<f64>() / sample.len() as f64;
                if slope.abs() < 1e-12 {
                    return Err(Error::SingularDerivative);
                }
                Ok(sample.iter().map(|&y| -score(y, t) / slope).collect())
            }
            Functional::LEstimator {
                weight,
                lower,
                upper,
            } => {
                let sorted = sorted(sample);
                let n = sorted.len();
                let nf = n as f64;
                kept_ranks(n, *lower, *upper)?;
                let inside = |p: f64| p > *lower && p < *upper;
                // IF(y) = ∫ (F_n(x) - 1{y <= x}) J(F_n(x)) dx over the empirical steps.
                Ok(sample
                    .iter()
                    .map(|&y| {
                        (1..n)
                            .map(|t| {
                                let p = t as f64 / nf;
                                if !inside(p) {
                                    return 0.0;
                                }
                                let ind = if y <= sorted[t - 1] { 1.0 } else { 0.0 };
                                (p - ind) * weight(p) * (sorted[t] - sorted[t - 1])
                            })
                            .sum()
                    })
                    .collect())
            }
            Functional::TrimmedMean { lower, upper } => {
                let sorted = sorted(sample);
                let n = sorted.len();
                let (lo, hi) = kept_ranks(n, *lower, *upper)?;
                let below = if lo == 0 { f64::NEG_INFINITY } else { sorted[lo - 1] };
                let above = if hi + 1 >= n { f64::INFINITY } else { sorted[hi + 1] };
                let width = upper - lower;
                Ok(sample
                    .iter()
                    .map(|&y| if y > below && y < above { y / width } else { 0.0 })
                    .collect())
            }
        }
    }
}

fn check_trim(lower: f64, upper: f64) -> Result<()> {
    if !(lower >= 0.0 && upper <= 1.0 && lower < upper) {
        return Err(parameter(format!(
            "trim bounds must satisfy 0 <= lower < upper <= 1, got ({lower}, {upper})"
        )));
    }
    Ok(())
}

fn base_means(bases: &[ScalarMap], sample: &[f64]) -> Vec<f64> {
    let n = sample.len() as f64;
    bases
        .iter()
        .map(|phi| sample.iter().map(|&y| phi(y)).sum::<f64>() / n)
        .collect()
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Zero-based rank range with plotting positions `(t + 1/2)/n` inside `(lower, upper)`.
fn kept_ranks(n: usize, lower: f64, upper: f64) -> Result<(usize, usize)> {
    let nf = n as f64;
    let kept: Vec<usize> = (0..n)
        .filter(|&t| {
            let p = (t as f64 + 0.5) / nf;
            p > lower && p < upper
        })
        .collect();
    match (kept.first(), kept.last()) {
        (Some(&a), Some(&b)) => Ok((a, b)),
        _ => Err(domain("trimming removes every observation")),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn m_estimate(
    score: &(dyn Fn(f64, f64) -> f64 + Send + Sync),
    bracket: Option<(f64, f64)>,
    sample: &[f64],
) -> Result<f64> {
    let (a, b) = match bracket {
        Some(b) => b,
        None => {
            let s = sorted(sample);
            let med = median(&s);
            let dev: Vec<f64> = sorted(&s.iter().map(|y| (y - med).abs()).collect::<Vec<_>>());
            let mut mad = median(&dev);
            if mad == 0.0 {
                mad = (s[s.len() - 1] - s[0]).max(1.0);
            }
            (med - 10.0 * mad, med + 10.0 * mad)
        }
    };
    let total = |t: f64| sample.iter().map(|&y| score(y, t)).sum::<f64>();
    bisect(total, a, b, 1e-10)
}

/// Block variance estimator applied to the influence values.
pub fn plugin_variance(
    functional: &Functional,
    sample: &[f64],
    scheme: BlockScheme,
    alpha_m: f64,
) -> Result<VarianceEstimate> {
    let x = functional.influence_estimates(sample)?;
    variance_estimator(&x, scheme, alpha_m)
}

/// Delete-one-block jackknife over all overlapping blocks of length `ell`.
pub fn block_jackknife(
    functional: &Functional,
    sample: &[f64],
    ell: usize,
    alpha_m: f64,
) -> Result<VarianceEstimate> {
    check_alpha_m(alpha_m)?;
    let n = sample.len();
    if ell == 0 || ell >= n {
        return Err(Error::BlockLength { ell, n });
    }
    let blocks = n - ell + 1;
    let values: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|j| {
            let mut rest = Vec::with_capacity(n - ell);
            rest.extend_from_slice(&sample[..j]);
            rest.extend_from_slice(&sample[j + ell..]);
            functional
                .evaluate(&rest)
                .map_err(|e| Error::DeletedBlock {
                    block: j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let nb = blocks as f64;
    let mean = values.iter().sum::<f64>() / nb;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let lf = ell as f64;
    let value = (nb - 1.0).powi(2) / (lf * lf) * lf.powf(alpha_m) / nb * ss;
    Ok(VarianceEstimate {
        value,
        scheme: BlockScheme::overlapping(ell),
        alpha_m,
        n,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_examples() {
        let f = Functional::mean();
        assert_eq!(f.evaluate(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        let inf = f.influence_estimates(&[1.0, 2.0, 6.0]).unwrap();
        assert_eq!(inf, vec![-2.0, -1.0, 3.0]);
    }

    #[test]
    fn linear_score_gives_mean() {
        let f = Functional::MEstimator {
            score: Arc::new(|y, t| y - t),
            score_derivative: Arc::new(|_, _| -1.0),
            bracket: None,
        };
        let x = [0.3, 1.9, -2.2, 4.4, 0.1];
        let mean = x.iter().sum::<f64>() / 5.0;
        assert!((f.evaluate(&x).unwrap() - mean).abs() < 1e-9);
        let inf = f.influence_estimates(&x).unwrap();
        assert!((inf[3] - (4.4 - f.evaluate(&x).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn trimmed_hand_example() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let f = Functional::trimmed_mean(0.2).unwrap();
        assert!((f.evaluate(&x).unwrap() - 5.5).abs() < 1e-15);
        let inf = f.influence_estimates(&x).unwrap();
        for (i, v) in inf.iter().enumerate() {
            let rank = i + 1;
            let expected = if (3..=8).contains(&rank) { x[i] / 0.6 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }
        let l = Functional::trimmed_mean_exact(0.2).unwrap();
        assert!((l.evaluate(&x).unwrap() - 5.5).abs() < 1e-12);
        // Exact influence: winsorized at the empirical quantiles, up to a constant.
        let li = l.influence_estimates(&x).unwrap();
        for i in 1..10 {
            let d = (x[i].clamp(3.0, 8.0) - x[i - 1].clamp(3.0, 8.0)) / 0.6;
            assert!((li[i] - li[i - 1] - d).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn full_trim_is_domain_error() {
        let f = Functional::trimmed(0.45, 0.46).unwrap();
        assert!(matches!(f.evaluate(&[1.0, 2.0, 3.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn huber_influence_bounded() {
        let f = Functional::huber(1.0).unwrap();
        let x = [0.0, 0.5, -0.3, 10.0, -7.0, 0.2, 0.1];
        let t = f.evaluate(&x).unwrap();
        let inf = f.influence_estimates(&x).unwrap();
        let slope = x.iter().filter(|&&y| (y - t).abs() < 1.0).count() as f64 / x.len() as f64;
        assert!(inf.iter().all(|v| v.abs() <= 1.0 / slope + 1e-12));
    }

    #[test]
    fn bjk_matches_plugin_for_mean() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7919) % 97) as f64 / 13.0).collect();
        for ell in [1usize, 3, 9] {
            let b = block_jackknife(&Functional::mean(), &x, ell, 0.4).unwrap();
            let p = plugin_variance(&Functional::mean(), &x, BlockScheme::overlapping(ell), 0.4)
                .unwrap();
            assert!((b.value - p.value).abs() <= 1e-10 * p.value);
        }
    }

    #[test]
    fn parse_names() {
        assert!(Functional::parse("mean").is_ok());
        assert!(matches!(
            Functional::parse("trimmed:0.2").unwrap(),
            Functional::TrimmedMean { .. }
        ));
        assert!(Functional::parse("huber").is_err());
        assert!(Functional::parse("median").is_err());
    }
}
