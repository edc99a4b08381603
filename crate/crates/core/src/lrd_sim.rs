//! Stationary Gaussian long-memory models and their exact simulation.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::hermite::hermite_poly;
use crate::numerics::rng::stream_rng;

/// Covariance family of a unit-variance stationary Gaussian sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovarianceKind {
    /// Fractional Gaussian noise with Hurst index `hurst`.
    Fgn { hurst: f64 },
    /// FARIMA(0, d, 0), normalised to unit variance.
    Farima { d: f64 },
    /// `c0 k^-alpha (1 + L(k) k^-tau)` with `L` tabulated for `k = 1, 2, ...` and
    /// held at its last value beyond the table.
    Explicit {
        alpha: f64,
        c0: f64,
        tau: f64,
        slowly_varying: Vec<f64>,
    },
}

/// Validated covariance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    kind: CovarianceKind,
}

fn binomial_real(a: f64, n: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..n {
        v *= (a - i as f64) / (i as f64 + 1.0);
    }
    v
}

fn bernoulli_odd(n: usize, d: f64) -> f64 {
    match n {
        3 => d * (d * (d - 1.5) + 0.5),
        5 => {
            let d2 = d * d;
            d * (d2 * (d2 - 2.5 * d + 5.0 / 3.0) - 1.0 / 6.0)
        }
        7 => {
            let d2 = d * d;
            d * (d2 * d2 * (d2 - 3.5 * d + 3.5) - 7.0 / 6.0 * d2 + 1.0 / 6.0)
        }
        9 => {
            let d2 = d * d;
            let d4 = d2 * d2;
            d * (d4 * d2 * (d2 - 4.5 * d + 6.0) - 4.2 * d4 + 2.0 * d2 - 0.3)
        }
        _ => unreachable!(),
    }
}

const FGN_SERIES_LAG: u64 = 8;
const FARIMA_ASYMPTOTIC_LAG: u64 = 32;

impl CovarianceModel {
    /// Fractional Gaussian noise with Hurst index in `(1/2, 1)`.
    pub fn fgn(hurst: f64) -> Result<Self> {
        if !(hurst > 0.5 && hurst < 1.0) {
            return Err(parameter(format!("Hurst index {hurst} not in (0.5, 1)")));
        }
        Ok(Self {
            kind: CovarianceKind::Fgn { hurst },
        })
    }

    /// Fractional Gaussian noise for any Hurst index in `(0, 1)`, including the
    /// short- and anti-persistent range.
    pub fn fgn_increments(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(parameter(format!("Hurst index {hurst} not in (0, 1)")));
        }
        Ok(Self {
            kind: CovarianceKind::Fgn { hurst },
        })
    }

    /// Fractional Gaussian noise with memory exponent `alpha`, i.e. `H = 1 - alpha/2`.
    pub fn fgn_with_alpha(alpha: f64) -> Result<Self> {
        Self::fgn(1.0 - alpha / 2.0)
    }

    /// FARIMA(0, d, 0) with `d` in `(0, 1/2)`.
    pub fn farima(d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 0.5) {
            return Err(parameter(format!("FARIMA d = {d} not in (0, 0.5)")));
        }
        Ok(Self {
            kind: CovarianceKind::Farima { d },
        })
    }

    /// FARIMA with memory exponent `alpha`, i.e. `d = (1 - alpha)/2`.
    pub fn farima_with_alpha(alpha: f64) -> Result<Self> {
        Self::farima((1.0 - alpha) / 2.0)
    }

    /// Explicit power-law covariance with a tabulated slowly varying correction.
    pub fn explicit(alpha: f64, c0: f64, tau: f64, slowly_varying: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(parameter(format!("memory exponent {alpha} not in (0, 1)")));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(parameter("scale must be positive"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(parameter("decay order must be positive"));
        }
        if slowly_varying.is_empty() || slowly_varying.iter().any(|v| !v.is_finite()) {
            return Err(parameter("slowly varying table must be non-empty and finite"));
        }
        Ok(Self {
            kind: CovarianceKind::Explicit {
                alpha,
                c0,
                tau,
                slowly_varying,
            },
        })
    }

    pub fn kind(&self) -> &CovarianceKind {
        &self.kind
    }

    /// Memory exponent `alpha` in `gamma(k) ~ c0 k^-alpha`.
    pub fn alpha(&self) -> f64 {
        match &self.kind {
            CovarianceKind::Fgn { hurst } => 2.0 - 2.0 * hurst,
            CovarianceKind::Farima { d } => 1.0 - 2.0 * d,
            CovarianceKind::Explicit { alpha, .. } => *alpha,
        }
    }

    /// Leading constant `c0` in `gamma(k) ~ c0 k^-alpha`.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            CovarianceKind::Fgn { hurst } => hurst * (2.0 * hurst - 1.0),
            CovarianceKind::Farima { d } => {
                use statrs::function::gamma::gamma;
                gamma(1.0 - d) / gamma(*d)
            }
            CovarianceKind::Explicit { c0, .. } => *c0,
        }
    }

    /// Order of the second-order term, so that `gamma(k) = c0 k^-alpha (1 + O(k^-tau))`.
    pub fn decay_order(&self) -> f64 {
        match &self.kind {
            CovarianceKind::Fgn { .. } | CovarianceKind::Farima { .. } => 2.0,
            CovarianceKind::Explicit { tau, .. } => *tau,
        }
    }

    /// True when the covariances are positive and not summable.
    pub fn is_long_memory(&self) -> bool {
        let a = self.alpha();
        a > 0.0 && a < 1.0
    }

    /// Autocovariance at `lag`.
    pub fn covariance(&self, lag: u64) -> f64 {
        if lag == 0 {
            return 1.0;
        }
        match &self.kind {
            CovarianceKind::Fgn { hurst } => {
                let a = 2.0 * hurst;
                let k = lag as f64;
                if lag < FGN_SERIES_LAG {
                    0.5 * ((k + 1.0).powf(a) - 2.0 * k.powf(a) + (k - 1.0).powf(a))
                } else {
                    k.powf(a) * fgn_series(a, k)
                }
            }
            CovarianceKind::Farima { d } => {
                if lag < FARIMA_ASYMPTOTIC_LAG {
                    farima_recurrence(*d, lag)
                } else {
                    let k = lag as f64;
                    self.scale() * k.powf(-self.alpha()) * (1.0 + self.relative_correction(lag))
                }
            }
            CovarianceKind::Explicit { alpha, c0, .. } => {
                let k = lag as f64;
                c0 * k.powf(-alpha) * (1.0 + self.relative_correction(lag))
            }
        }
    }

    /// Autocovariances at lags `0..n`.
    pub fn covariances(&self, n: usize) -> Vec<f64> {
        match &self.kind {
            CovarianceKind::Farima { d } => {
                let mut out = Vec::with_capacity(n);
                let mut g = 1.0;
                for k in 0..n as u64 {
                    if k == 0 {
                        out.push(1.0);
                    } else if k < FARIMA_ASYMPTOTIC_LAG {
                        let kf = k as f64;
                        g *= (kf - 1.0 + d) / (kf - d);
                        out.push(g);
                    } else {
                        out.push(self.covariance(k));
                    }
                }
                out
            }
            _ => (0..n as u64).map(|k| self.covariance(k)).collect(),
        }
    }

    /// `delta(k)` with `gamma(k) = c0 k^-alpha (1 + delta(k))`, computed without
    /// cancellation for large `k`.
    pub fn relative_correction(&self, lag: u64) -> f64 {
        assert!(lag >= 1);
        let k = lag as f64;
        match &self.kind {
            CovarianceKind::Fgn { hurst } => {
                let a = 2.0 * hurst;
                let c0 = self.scale();
                if lag < FGN_SERIES_LAG {
                    self.covariance(lag) / (c0 * k.powf(a - 2.0)) - 1.0
                } else {
                    // Σ_{j≥2} binom(a, 2j) k^{2-2j} / binom(a, 2)
                    let x = 1.0 / (k * k);
                    let mut term_pow = x;
                    let mut s = 0.0;
                    for j in 2..40 {
                        let t = binomial_real(a, 2 * j) * term_pow;
                        s += t;
                        if t.abs() < 1e-18 * s.abs().max(1e-300) {
                            break;
                        }
                        term_pow *= x;
                    }
                    s / c0
                }
            }
            CovarianceKind::Farima { d } => {
                if lag < FARIMA_ASYMPTOTIC_LAG {
                    farima_recurrence(*d, lag) / (self.scale() * k.powf(-self.alpha())) - 1.0
                } else {
                    // ln Γ(k+d)/Γ(k+1-d) - (2d-1) ln k, Bernoulli-polynomial expansion.
                    let mut s = 0.0;
                    let mut xp = k;
                    for n in [2usize, 4, 6, 8] {
                        xp *= if n == 2 { k } else { k * k };
                        s -= 2.0 * bernoulli_odd(n + 1, *d) / ((n * (n + 1)) as f64 * xp);
                    }
                    s.exp_m1()
                }
            }
            CovarianceKind::Explicit {
                tau,
                slowly_varying,
                ..
            } => {
                let idx = (lag as usize - 1).min(slowly_varying.len() - 1);
                slowly_varying[idx] * k.powf(-tau)
            }
        }
    }
}

fn fgn_series(a: f64, k: f64) -> f64 {
    let x = 1.0 / (k * k);
    let mut pow = x;
    let mut s = 0.0;
    for j in 1..40 {
        let t = binomial_real(a, 2 * j) * pow;
        s += t;
        if t.abs() < 1e-18 * s.abs().max(1e-300) {
            break;
        }
        pow *= x;
    }
    s
}

fn farima_recurrence(d: f64, lag: u64) -> f64 {
    let mut g = 1.0;
    for k in 1..=lag {
        let kf = k as f64;
        g *= (kf - 1.0 + d) / (kf - d);
    }
    g
}

/// A finite real series with the seed that produced it, if simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl TimeSeries {
    /// Wraps observed data, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_seed(values, None)
    }

    pub fn with_seed(values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(parameter("series is empty"));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

impl AsRef<[f64]> for TimeSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

const CHOLESKY_LIMIT: usize = 5000;
const MAX_EMBEDDING: usize = 1 << 26;

#[derive(Clone)]
enum Method {
    Circulant {
        size: usize,
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        lower: Vec<f64>,
    },
}

/// Exact sampler for a stationary Gaussian vector of fixed length.
///
/// Preparation (embedding eigenvalues or factorisation) happens once, so many
/// replicates can be drawn cheaply and from several threads.
#[derive(Clone)]
pub struct GaussianSampler {
    n: usize,
    method: Method,
}

impl std::fmt::Debug for GaussianSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let method = match &self.method {
            Method::Circulant { size, .. } => format!("circulant({size})"),
            Method::Cholesky { .. } => "cholesky".to_string(),
        };
        f.debug_struct("GaussianSampler")
            .field("n", &self.n)
            .field("method", &method)
            .finish()
    }
}

impl GaussianSampler {
    pub fn new(model: &CovarianceModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(parameter("series length must be positive"));
        }
        if n == 1 {
            return Ok(Self {
                n,
                method: Method::Cholesky { lower: vec![1.0] },
            });
        }
        let mut size = 2 * (n - 1);
        let mut planner = FftPlanner::new();
        while size <= MAX_EMBEDDING {
            let half = size / 2;
            let gam = model.covariances(half + 1);
            let mut buf: Vec<Complex<f64>> = (0..size)
                .map(|j| Complex::new(gam[j.min(size - j)], 0.0))
                .collect();
            let fft = planner.plan_fft_forward(size);
            fft.process(&mut buf);
            let max = buf.iter().fold(0.0_f64, |m, c| m.max(c.re));
            let min = buf.iter().fold(f64::INFINITY, |m, c| m.min(c.re));
            if min >= -1e-8 * max {
                let scale = buf
                    .iter()
                    .map(|c| (c.re.max(0.0) / size as f64).sqrt())
                    .collect();
                return Ok(Self {
                    n,
                    method: Method::Circulant { size, scale, fft },
                });
            }
            size *= 2;
        }
        if n <= CHOLESKY_LIMIT {
            let gam = model.covariances(n);
            let lower = toeplitz_cholesky(&gam)?;
            return Ok(Self {
                n,
                method: Method::Cholesky { lower },
            });
        }
        Err(Error::SimulationInfeasible(format!(
            "circulant embedding not nonnegative up to size {MAX_EMBEDDING} and n = {n} exceeds the Cholesky limit"
        )))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Draws one realisation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.method {
            Method::Circulant { size, scale, fft } => {
                let mut buf: Vec<Complex<f64>> = scale
                    .iter()
                    .map(|s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                debug_assert_eq!(buf.len(), *size);
                fft.process(&mut buf);
                buf.iter().take(self.n).map(|c| c.re).collect()
            }
            Method::Cholesky { lower } => {
                let n = self.n;
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n)
                    .map(|i| (0..=i).map(|j| lower[i * n + j] * z[j]).sum())
                    .collect()
            }
        }
    }
}

fn toeplitz_cholesky(gam: &[f64]) -> Result<Vec<f64>> {
    let n = gam.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = gam[i - j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::SimulationInfeasible(
                        "covariance matrix is not positive definite".into(),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Simulates `n` values of the unit-variance Gaussian sequence under `model`.
pub fn simulate_gaussian(model: &CovarianceModel, n: usize, seed: u64) -> Result<TimeSeries> {
    let sampler = GaussianSampler::new(model, n)?;
    let mut rng = stream_rng(seed, 0);
    TimeSeries::with_seed(sampler.sample(&mut rng), Some(seed))
}

/// Applies `g` pointwise, failing at the first non-finite output.
pub fn transform<G: Fn(f64) -> f64>(series: &TimeSeries, g: G) -> Result<TimeSeries> {
    let values = series.values().iter().map(|&z| g(z)).collect();
    TimeSeries::with_seed(values, series.seed())
}

/// Named transformations used throughout the tools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    Identity,
    /// Probabilists' Hermite polynomial of the given degree.
    Hermite(usize),
    Cos,
    Sin,
    /// `z + z^2 / 2`
    ZPlusHalfSquare,
    /// `z + H2(z)/20`
    ZPlusH2Over20,
    /// `z + H2(z)/20 + H3(z)/(20 sqrt 3)`
    MixedLow,
}

impl Transform {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Hermite(k) => hermite_poly(*k, z),
            Transform::Cos => z.cos(),
            Transform::Sin => z.sin(),
            Transform::ZPlusHalfSquare => z + 0.5 * z * z,
            Transform::ZPlusH2Over20 => z + (z * z - 1.0) / 20.0,
            Transform::MixedLow => {
                z + (z * z - 1.0) / 20.0 + (z * z * z - 3.0 * z) / (20.0 * 3f64.sqrt())
            }
        }
    }

    /// Short name accepted by [`Transform::parse`].
    pub fn name(&self) -> String {
        match self {
            Transform::Identity => "z".into(),
            Transform::Hermite(k) => format!("h{k}"),
            Transform::Cos => "cos".into(),
            Transform::Sin => "sin".into(),
            Transform::ZPlusHalfSquare => "z+0.5z2".into(),
            Transform::ZPlusH2Over20 => "z+h2/20".into(),
            Transform::MixedLow => "g1".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Ok(match t.as_str() {
            "z" | "id" | "identity" => Transform::Identity,
            "cos" => Transform::Cos,
            "sin" => Transform::Sin,
            "z+0.5z2" | "z+z2/2" => Transform::ZPlusHalfSquare,
            "z+h2/20" => Transform::ZPlusH2Over20,
            "g1" => Transform::MixedLow,
            _ => {
                if let Some(k) = t.strip_prefix('h').and_then(|k| k.parse::<usize>().ok()) {
                    Transform::Hermite(k)
                } else {
                    return Err(Error::Config(format!("unknown transformation '{s}'")));
                }
            }
        })
    }
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// Natural log of `Γ(k+d)/Γ(k+1-d)` via `ln Γ`, used as an independent check.
pub fn farima_gamma_ratio(d: f64, lag: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let k = lag as f64;
    (ln_gamma(k + d) - ln_gamma(k + 1.0 - d) + ln_gamma(1.0 - d) - ln_gamma(d)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(CovarianceModel::fgn(0.5).is_err());
        assert!(CovarianceModel::fgn(1.0).is_err());
        assert!(CovarianceModel::farima(0.5).is_err());
        assert!(CovarianceModel::farima(0.0).is_err());
        assert!(CovarianceModel::fgn_increments(0.3).is_ok());
    }

    #[test]
    fn fgn_series_matches_closed_form() {
        for &h in &[0.55, 0.7, 0.9, 0.99] {
            let a = 2.0 * h;
            for k in [8u64, 9, 20, 50] {
                let kf = k as f64;
                let direct = 0.5 * ((kf + 1.0).powf(a) - 2.0 * kf.powf(a) + (kf - 1.0).powf(a));
                let m = CovarianceModel::fgn(h).unwrap();
                assert!((m.covariance(k) - direct).abs() <= 1e-10 * direct.abs());
            }
        }
    }

    #[test]
    fn fgn_relative_correction_consistent() {
        let m = CovarianceModel::fgn(0.8).unwrap();
        for k in [1u64, 5, 7, 8, 100, 10_000] {
            let lhs = m.covariance(k);
            let rhs = m.scale() * (k as f64).powf(-m.alpha()) * (1.0 + m.relative_correction(k));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }
    }

    #[test]
    fn farima_matches_gamma_ratio() {
        for &d in &[0.05, 0.2, 0.4] {
            let m = CovarianceModel::farima(d).unwrap();
            let all = m.covariances(201);
            for k in 1..=200u64 {
                let g = farima_gamma_ratio(d, k);
                assert!((all[k as usize] - g).abs() <= 1e-10 * g, "d={d} k={k}");
                assert!((m.covariance(k) - g).abs() <= 1e-10 * g, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn parse_transform_names() {
        for t in [
            Transform::Identity,
            Transform::Hermite(3),
            Transform::Cos,
            Transform::Sin,
            Transform::ZPlusHalfSquare,
            Transform::ZPlusH2Over20,
            Transform::MixedLow,
        ] {
            assert_eq!(Transform::parse(&t.name()).unwrap(), t);
        }
        assert!(Transform::parse("tan").is_err());
    }

    #[test]
    fn sampler_small_n_and_determinism() {
        let m = CovarianceModel::fgn(0.7).unwrap();
        let a = simulate_gaussian(&m, 257, 11).unwrap();
        let b = simulate_gaussian(&m, 257, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(simulate_gaussian(&m, 1, 3).unwrap().len(), 1);
        assert!(simulate_gaussian(&m, 0, 3).is_err());
    }
}
