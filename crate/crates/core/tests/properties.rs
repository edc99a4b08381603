use lrdblock::block_estimators::{variance_estimator, BlockKind, BlockScheme};
use lrdblock::experiments::{bootstrap_ci, BootstrapConfig};
use lrdblock::functionals::{block_jackknife, plugin_variance, Functional};
use lrdblock::hermite::{hermite_coefficients, hermite_poly};
use lrdblock::rank_test::{anderson_darling, block_residuals, ks_statistic};
use proptest::prelude::*;

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, min..max)
}

fn spread(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_variance_is_shift_invariant_and_scales_quadratically(
        x in series(20, 120),
        shift in -100.0f64..100.0,
        scale in 0.1f64..10.0,
        ell in 1usize..8,
        alpha_m in 0.05f64..1.0,
        ol in any::<bool>(),
    ) {
        let kind = if ol { BlockKind::Overlapping } else { BlockKind::NonOverlapping };
        let scheme = BlockScheme::new(kind, ell);
        let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
        let a = variance_estimator(&x, scheme, alpha_m).unwrap().value;
        let b = variance_estimator(&y, scheme, alpha_m).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!(close(b, scale * scale * a, 1e-8));
    }

    #[test]
    fn jackknife_of_mean_equals_overlapping_plugin(
        x in series(12, 80),
        ell in 1usize..6,
        alpha_m in 0.05f64..1.0,
    ) {
        let f = Functional::mean();
        let p = plugin_variance(&f, &x, BlockScheme::overlapping(ell), alpha_m).unwrap().value;
        let j = block_jackknife(&f, &x, ell, alpha_m).unwrap().value;
        prop_assert!(close(j, p, 1e-9));
    }

    #[test]
    fn trimmed_mean_is_location_scale_equivariant(
        x in series(10, 60),
        shift in -10.0f64..10.0,
        scale in 0.1f64..10.0,
        delta in 0.0f64..0.4,
    ) {
        let f = Functional::trimmed_mean(delta).unwrap();
        let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
        let tx = f.evaluate(&x).unwrap();
        let ty = f.evaluate(&y).unwrap();
        prop_assert!(close(ty, shift + scale * tx, 1e-9));
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(tx >= lo - 1e-9 && tx <= hi + 1e-9);
    }

    #[test]
    fn influence_values_of_mean_are_centred_data(x in series(5, 50)) {
        let inf = Functional::mean().influence_estimates(&x).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        for (a, b) in inf.iter().zip(&x) {
            prop_assert!(close(*a, b - m, 1e-12));
        }
    }

    #[test]
    fn residuals_lie_in_unit_interval(x in series(40, 200), ell in 2usize..5, ol in any::<bool>()) {
        prop_assume!(spread(&x) > 1e-6);
        let kind = if ol { BlockKind::Overlapping } else { BlockKind::NonOverlapping };
        let u = block_residuals(&x, ell, kind).unwrap();
        prop_assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        let ks = ks_statistic(&u).unwrap();
        prop_assert!((0.0..=1.0).contains(&ks));
        prop_assert!(anderson_darling(&u).unwrap().value.is_finite());
    }

    #[test]
    fn hermite_coefficients_of_polynomials(c in prop::collection::vec(-3.0f64..3.0, 2..6)) {
        prop_assume!(c[1..].iter().any(|a| a.abs() > 0.01));
        let g = |z: f64| c.iter().enumerate().map(|(k, a)| a * hermite_poly(k, z)).sum::<f64>();
        let spec = hermite_coefficients(g, 8).unwrap();
        // E[H_j H_k] = k! delta_jk, so J_k = c_k k!.
        let mut fact = 1.0;
        for (k, a) in c.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            prop_assert!((spec.coefficient(k) - a * fact).abs() < 1e-8 * (1.0 + fact));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bootstrap_width_is_monotone_in_level(x in series(200, 400), seed in any::<u64>()) {
        prop_assume!(spread(&x) > 1e-3);
        let f = Functional::mean();
        let mut last = 0.0;
        for level in [0.5, 0.8, 0.9, 0.95] {
            let cfg = BootstrapConfig { level, seed, alpha_m: Some(0.6), ..BootstrapConfig::default() };
            let ci = bootstrap_ci(&x, &f, 5, &cfg).unwrap();
            prop_assert!(ci.lower <= ci.estimate && ci.estimate <= ci.upper);
            prop_assert!(ci.width() >= last);
            last = ci.width();
        }
    }
}
