//! Hermite expansions of transformations of a standard normal variable.
//!
//! Coefficients are reported on the raw scale `J_k = E[G(Z) H_k(Z)]`, but all
//! rank decisions use the normalised scale `J_k / sqrt(k!)`, on which the
//! squared coefficients sum to the variance.

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::numerics::quadrature::{gauss_hermite_normal, integrate_vec};
use crate::numerics::special::{factorial, normal_pdf};

/// Probabilists' Hermite polynomial `H_k(z)`.
pub fn hermite_poly(k: usize, z: f64) -> f64 {
    let mut h0 = 1.0;
    if k == 0 {
        return h0;
    }
    let mut h1 = z;
    for j in 1..k {
        let h2 = z * h1 - j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Fills `out[k] = H_k(z) / sqrt(k!)` for `k = 0..out.len()`.
pub fn hermite_normalized(z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = z;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (z * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
}

/// A Hermite rank, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

impl Rank {
    pub fn finite(&self) -> Option<usize> {
        match self {
            Rank::Finite(k) => Some(*k),
            Rank::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Rank::Finite(_))
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rank::Finite(k) => write!(f, "{k}"),
            Rank::Infinite => f.write_str("inf"),
        }
    }
}

/// Truncated Hermite expansion with its ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSpec {
    /// Raw coefficients `J_0, ..., J_K`.
    pub coefficients: Vec<f64>,
    /// Hermite rank `m >= 1`.
    pub rank: usize,
    /// Next order above `m` with a non-negligible coefficient.
    pub second_rank: Rank,
    /// First order `k >= m` with both `J_k` and `J_{k+1}` non-negligible.
    pub pair_rank: Rank,
    /// Threshold applied to `|J_k| / sqrt(k!)`.
    pub tolerance: f64,
    /// `Var G(Z)`, including mass beyond the truncation order.
    pub variance: f64,
    /// `Var G(Z)` minus the variance captured by orders `1..=K`.
    pub tail_mass: f64,
}

impl HermiteSpec {
    /// Builds a spec from given raw coefficients, taken as the complete expansion.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(parameter("need coefficients of order 0 and at least 1"));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(parameter("non-finite Hermite coefficient"));
        }
        let normalized = normalize(&coefficients);
        let variance = normalized.iter().skip(1).map(|c| c * c).sum();
        Self::assemble(coefficients, &normalized, variance, 0.0)
    }

    // `floor` is the quadrature noise level below which coefficients count as zero.
    fn assemble(
        coefficients: Vec<f64>,
        normalized: &[f64],
        variance: f64,
        floor: f64,
    ) -> Result<Self> {
        let (rank, second_rank, pair_rank, tolerance) = ranks_normalized(normalized, floor)?;
        let captured: f64 = normalized.iter().skip(1).map(|c| c * c).sum();
        Ok(Self {
            coefficients,
            rank,
            second_rank,
            pair_rank,
            tolerance,
            variance,
            tail_mass: (variance - captured).max(0.0),
        })
    }

    /// Mean `E G(Z)`.
    pub fn mean(&self) -> f64 {
        self.coefficients[0]
    }

    /// Highest order kept.
    pub fn max_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Squared normalised coefficient `J_k^2 / k!` (zero beyond the truncation).
    pub fn weight(&self, k: usize) -> f64 {
        match self.coefficients.get(k) {
            Some(c) => c * c / factorial(k),
            None => 0.0,
        }
    }

    /// Raw coefficient `J_k` (zero beyond the truncation).
    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients.get(k).copied().unwrap_or(0.0)
    }

    /// `J_k / sqrt(k!)`.
    pub fn normalized(&self) -> Vec<f64> {
        normalize(&self.coefficients)
    }

    /// Orders `k >= rank` whose coefficient exceeds the tolerance.
    pub fn active_orders(&self) -> Vec<usize> {
        self.normalized()
            .iter()
            .enumerate()
            .skip(self.rank)
            .filter(|(_, c)| c.abs() > self.tolerance)
            .map(|(k, _)| k)
            .collect()
    }
}

fn normalize(raw: &[f64]) -> Vec<f64> {
    raw.iter()
        .enumerate()
        .map(|(k, c)| c / factorial(k).sqrt())
        .collect()
}

fn ranks_normalized(c: &[f64], floor: f64) -> Result<(usize, Rank, Rank, f64)> {
    let scale = c.iter().skip(1).fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = (1e-8 * scale).max(floor);
    if scale <= floor {
        return Err(Error::Degenerate);
    }
    let big = |k: usize| c[k].abs() > tol;
    let m = (1..c.len()).find(|&k| big(k)).ok_or(Error::Degenerate)?;
    let m2 = (m + 1..c.len())
        .find(|&k| big(k))
        .map_or(Rank::Infinite, Rank::Finite);
    let mp = (m..c.len().saturating_sub(1))
        .find(|&k| c[k].abs() * c[k + 1].abs() > tol * tol)
        .map_or(Rank::Infinite, Rank::Finite);
    Ok((m, m2, mp, tol))
}

/// Computes `(m, m2, mp)` from raw coefficients `J_0..J_K`.
pub fn ranks(coefficients: &[f64]) -> Result<(usize, Rank, Rank)> {
    let (m, m2, mp, _) = ranks_normalized(&normalize(coefficients), 0.0)?;
    Ok((m, m2, mp))
}

const GH_ORDERS: [usize; 4] = [48, 96, 140, 180];

/// Hermite coefficients of a smooth `g` up to order `kmax`, by Gauss–Hermite
/// quadrature with increasing order until the coefficients stabilise.
pub fn hermite_coefficients<G: Fn(f64) -> f64>(g: G, kmax: usize) -> Result<HermiteSpec> {
    if kmax == 0 {
        return Err(parameter("maximum order must be at least 1"));
    }
    let mut prev: Option<Vec<f64>> = None;
    let mut he = vec![0.0; kmax + 1];
    for &order in GH_ORDERS.iter().filter(|&&o| 2 * o > kmax + 8) {
        let (x, w) = gauss_hermite_normal(order);
        let mut c = vec![0.0; kmax + 1];
        let mut second = 0.0;
        for (&xi, &wi) in x.iter().zip(&w) {
            let gi = g(xi);
            if !gi.is_finite() {
                return Err(Error::Accuracy(format!("transformation not finite at {xi}")));
            }
            hermite_normalized(xi, &mut he);
            for k in 0..=kmax {
                c[k] += wi * gi * he[k];
            }
            second += wi * gi * gi;
        }
        let scale = second.sqrt().max(1.0);
        if let Some(p) = &prev {
            let diff = c
                .iter()
                .zip(p)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if diff <= 1e-12 * scale {
                let variance = (second - c[0] * c[0]).max(0.0);
                let raw = c
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * factorial(k).sqrt())
                    .collect();
                return HermiteSpec::assemble(raw, &c, variance, 1e-13 * second.sqrt());
            }
        }
        prev = Some(c);
    }
    Err(Error::Accuracy(
        "Hermite coefficients did not converge; use the piecewise variant for non-smooth transformations".into(),
    ))
}

const PIECEWISE_HALF_WIDTH: f64 = 16.0;

/// Hermite coefficients of a piecewise-smooth `g` by adaptive quadrature on
/// `[-16, 16]`, split at the supplied discontinuities.
pub fn hermite_coefficients_piecewise<G: Fn(f64) -> f64>(
    g: G,
    kmax: usize,
    breakpoints: &[f64],
) -> Result<HermiteSpec> {
    if kmax == 0 {
        return Err(parameter("maximum order must be at least 1"));
    }
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && b.abs() < PIECEWISE_HALF_WIDTH)
        .collect();
    pts.push(-PIECEWISE_HALF_WIDTH);
    pts.push(PIECEWISE_HALF_WIDTH);
    pts.extend([-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0]);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let dim = kmax + 2;
    let mut he = vec![0.0; kmax + 1];
    let out = integrate_vec(
        |z, o: &mut [f64]| {
            let gz = g(z);
            let p = normal_pdf(z);
            hermite_normalized(z, &mut he);
            for k in 0..=kmax {
                o[k] = gz * he[k] * p;
            }
            o[kmax + 1] = gz * gz * p;
        },
        dim,
        &pts,
        1e-13,
        1e-11,
    )?;
    let c = &out.values[..=kmax];
    let variance = (out.values[kmax + 1] - c[0] * c[0]).max(0.0);
    let raw = c
        .iter()
        .enumerate()
        .map(|(k, v)| v * factorial(k).sqrt())
        .collect();
    let floor = 1e-11 * out.values[kmax + 1].sqrt();
    HermiteSpec::assemble(raw, c, variance, floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_values() {
        assert_eq!(hermite_poly(0, 2.0), 1.0);
        assert_eq!(hermite_poly(2, 2.0), 3.0);
        assert_eq!(hermite_poly(3, 2.0), 2.0);
        let mut he = [0.0; 5];
        hermite_normalized(1.5, &mut he);
        for (k, v) in he.iter().enumerate() {
            assert!((v - hermite_poly(k, 1.5) / factorial(k).sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn cosine_coefficients() {
        let spec = hermite_coefficients(f64::cos, 12).unwrap();
        let e = (-0.5f64).exp();
        for k in 0..=12 {
            let exact = match k % 4 {
                0 => e,
                2 => -e,
                _ => 0.0,
            };
            assert!((spec.coefficients[k] - exact).abs() < 1e-12 * factorial(k).sqrt(), "k={k}");
        }
        assert_eq!(spec.rank, 2);
        assert_eq!(spec.second_rank, Rank::Finite(4));
        assert_eq!(spec.pair_rank, Rank::Infinite);
    }

    #[test]
    fn hermite_polynomial_rank() {
        let spec = hermite_coefficients(|z| hermite_poly(3, z), 10).unwrap();
        assert_eq!(spec.rank, 3);
        assert_eq!(spec.second_rank, Rank::Infinite);
        assert!((spec.coefficients[3] - 6.0).abs() < 1e-10);
        assert!((spec.variance - 6.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_constant() {
        assert!(matches!(
            hermite_coefficients(|_| 2.0, 8),
            Err(Error::Degenerate)
        ));
    }

    #[test]
    fn piecewise_indicator() {
        // 1{z > 0}: J_1 = φ(0), J_2 = 0, J_3 = -φ(0).
        let spec = hermite_coefficients_piecewise(|z| if z > 0.0 { 1.0 } else { 0.0 }, 6, &[0.0])
            .unwrap();
        let p0 = normal_pdf(0.0);
        assert!((spec.coefficients[0] - 0.5).abs() < 1e-12);
        assert!((spec.coefficients[1] - p0).abs() < 1e-12);
        assert!(spec.coefficients[2].abs() < 1e-12);
        assert!((spec.coefficients[3] + p0).abs() < 1e-12);
        assert_eq!(spec.rank, 1);
        assert_eq!(spec.second_rank, Rank::Finite(3));
        assert!((spec.variance - 0.25).abs() < 1e-12);
    }
}
