//! Small Monte Carlo checks of the simulators, estimators and the rank test.

use lrdblock::block_estimators::{limit_variance, target_variance, variance_estimator, BlockScheme};
use lrdblock::block_selection::{local_whittle, whittle_bandwidth};
use lrdblock::hermite::hermite_coefficients;
use lrdblock::numerics::rng::stream_rng;
use lrdblock::rank_test::{fbm_increments, rank_test, RankTestConfig};
use lrdblock::{CovarianceModel, GaussianSampler, Transform};
use rand_distr::{Distribution, StandardNormal};

#[test]
fn fbm_increments_recover_memory() {
    let (h, n, reps) = (0.8, 4096, 20);
    let mean: f64 = (0..reps)
        .map(|r| {
            let x = fbm_increments(n, h, 100 + r).unwrap();
            local_whittle(x.values(), whittle_bandwidth(n, 0.7)).unwrap().alpha_m
        })
        .sum::<f64>()
        / reps as f64;
    assert!((mean - (2.0 - 2.0 * h)).abs() < 0.05, "mean alpha {mean}");
}

#[test]
fn sample_variance_matches_model() {
    for model in [CovarianceModel::fgn(0.7).unwrap(), CovarianceModel::farima(0.3).unwrap()] {
        let sampler = GaussianSampler::new(&model, 256).unwrap();
        let mut rng = stream_rng(11, 0);
        let reps = 400;
        let (mut s0, mut s1) = (0.0, 0.0);
        for _ in 0..reps {
            let z = sampler.sample(&mut rng);
            s0 += z.iter().map(|v| v * v).sum::<f64>() / 256.0;
            s1 += z.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / 255.0;
        }
        let (g0, g1) = (s0 / reps as f64, s1 / reps as f64);
        assert!((g0 - 1.0).abs() < 0.03, "lag 0: {g0}");
        assert!((g1 - model.covariance(1)).abs() < 0.03, "lag 1: {g1}");
    }
}

#[test]
fn block_variance_approaches_target() {
    // H2 of fGn with alpha = 0.3: the mean has scaling exponent 0.6.
    let model = CovarianceModel::fgn_with_alpha(0.3).unwrap();
    let g = Transform::Hermite(2);
    let spec = hermite_coefficients(|z| g.apply(z), 8).unwrap();
    let n = 2000;
    let target = target_variance(&model, &spec, n, 0.6).unwrap();
    let limit = limit_variance(&model, &spec).unwrap();
    assert!((target - limit).abs() < 0.2 * limit);

    let sampler = GaussianSampler::new(&model, n).unwrap();
    let reps = 300;
    let mut means = Vec::with_capacity(reps);
    let mut estimates = 0.0;
    for r in 0..reps {
        let z = sampler.sample(&mut stream_rng(5, r as u64));
        let y: Vec<f64> = z.iter().map(|&v| g.apply(v)).collect();
        means.push(y.iter().sum::<f64>() / n as f64);
        estimates += variance_estimator(&y, BlockScheme::overlapping(20), 0.6).unwrap().value;
    }
    let scaled: Vec<f64> = means.iter().map(|m| (n as f64).powf(0.6) * m * m).collect();
    let mc = scaled.iter().sum::<f64>() / reps as f64;
    let se = (scaled.iter().map(|v| (v - mc) * (v - mc)).sum::<f64>() / reps as f64).sqrt()
        / (reps as f64).sqrt();
    assert!((mc - target).abs() < 4.0 * se, "mc {mc} +- {se} vs target {target}");
    // Block estimates are biased low at moderate n but of the right order.
    let avg = estimates / reps as f64;
    assert!(avg > 0.2 * target && avg < 1.2 * target, "avg {avg}");
}

fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn rank_test_size_on_white_noise() {
    let cfg = RankTestConfig {
        resamples: 100,
        hurst_override: Some(0.5),
        ..RankTestConfig::default()
    };
    let reps = 100;
    let rejections = (0..reps)
        .filter(|&r| {
            let x = white_noise(400, 1000 + r);
            rank_test(&x, &RankTestConfig { seed: r, ..cfg }).unwrap().reject
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    assert!(rate <= 0.12, "size {rate}");
}

#[test]
fn rank_test_is_location_scale_invariant() {
    let x = white_noise(500, 3);
    let y: Vec<f64> = x.iter().map(|v| 7.0 + 2.5 * v).collect();
    let cfg = RankTestConfig {
        resamples: 60,
        seed: 9,
        ..RankTestConfig::default()
    };
    let a = rank_test(&x, &cfg).unwrap();
    let b = rank_test(&y, &cfg).unwrap();
    assert!((a.statistic - b.statistic).abs() < 1e-9);
    assert!((a.hurst - b.hurst).abs() < 1e-12);
    assert_eq!(a.reject, b.reject);
}

#[test]
fn rank_test_quantile_decreases_with_significance() {
    let x = white_noise(400, 4);
    let mut last = f64::INFINITY;
    for sig in [0.01, 0.05, 0.1, 0.25] {
        let cfg = RankTestConfig {
            resamples: 80,
            significance: sig,
            seed: 2,
            ..RankTestConfig::default()
        };
        let r = rank_test(&x, &cfg).unwrap();
        assert!(r.quantile <= last);
        last = r.quantile;
    }
}

#[test]
fn rank_test_rejects_even_transformation() {
    // cos of strongly dependent fGn has Hermite rank 2.
    let model = CovarianceModel::fgn(0.9).unwrap();
    let sampler = GaussianSampler::new(&model, 2000).unwrap();
    let reps = 20;
    let rejections = (0..reps)
        .filter(|&r| {
            let z = sampler.sample(&mut stream_rng(77, r));
            let y: Vec<f64> = z.iter().map(|v| v.cos()).collect();
            let cfg = RankTestConfig { resamples: 100, seed: r, ..RankTestConfig::default() };
            rank_test(&y, &cfg).unwrap().reject
        })
        .count();
    assert!(rejections >= 10, "{rejections} of {reps}");
}
