//! Special functions not covered by `statrs`.

// B_{2k} / (2k)! for k = 1..=10.
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
    -174_611.0 / 802_857_662_698_291_200_000.0,
];

/// Riemann zeta (analytically continued) for real `s > 0`, `s != 1`.
///
/// For `s` in `(0, 1)` this equals `lim_K (Σ_{k≤K} k^{-s} - K^{1-s}/(1-s))`.
pub fn zeta(s: f64) -> f64 {
    debug_assert!(s > 0.0 && s != 1.0);
    const N: usize = 20;
    let nf = N as f64;
    let mut sum = 0.0;
    for j in (1..N).rev() {
        sum += (j as f64).powf(-s);
    }
    sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // Euler–Maclaurin corrections with rising factorial s (s+1) ... (s+2k-2).
    let mut rising = s;
    let mut pow = nf.powf(-s - 1.0);
    for (k, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let kk = (2 * k) as f64;
            rising *= (s + kk - 1.0) * (s + kk);
            pow /= nf * nf;
        }
        sum += c * rising * pow;
    }
    sum
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `ln k!` for small integers, exact summation.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `k!` as a float.
pub fn factorial(k: usize) -> f64 {
    (2..=k).fold(1.0, |acc, j| acc * j as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_known_values() {
        assert!((zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        assert!((zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(0.5) + 1.460_354_508_809_586_8).abs() < 1e-13);
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for &x in &[0.0, 0.3, 1.7, 5.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-14);
    }
}
