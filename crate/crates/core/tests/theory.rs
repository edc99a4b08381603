use lrdblock::asymptotics::{numeric_optimal_block, Theory};
use lrdblock::block_estimators::{limit_variance, target_variance, BlockKind};
use lrdblock::experiments::{FunctionalSpec, MarginalLaw, ProcessSpec, GaussianFamily};
use lrdblock::hermite::hermite_coefficients;
use lrdblock::numerics::rng::stream_rng;
use lrdblock::{CovarianceModel, HermiteSpec, Transform};
use rand_distr::{Distribution, StandardNormal};

fn spec(g: Transform) -> HermiteSpec {
    hermite_coefficients(|z| g.apply(z), 40).unwrap()
}

#[test]
fn optimal_block_converges_to_numeric_argmin() {
    for (alpha, g, kind) in [
        (0.4, Transform::Hermite(2), BlockKind::Overlapping),
        (0.3, Transform::Hermite(3), BlockKind::NonOverlapping),
        (0.35, Transform::Cos, BlockKind::Overlapping),
    ] {
        let model = CovarianceModel::fgn_with_alpha(alpha).unwrap();
        let theory = Theory::new(&model, &spec(g), kind).unwrap();
        let mut last = f64::INFINITY;
        for n in [1e5 as usize, 1e8 as usize, 1e11 as usize] {
            let closed = theory.optimal_block(n).unwrap().ell;
            let numeric = numeric_optimal_block(&theory, n).unwrap();
            let gap = (closed / numeric).ln().abs();
            assert!(gap <= last + 1e-9, "{g} alpha {alpha} n {n}: gap {gap} after {last}");
            last = gap;
        }
        assert!(last < 0.02, "{g} alpha {alpha}: final gap {last}");
    }
}

#[test]
fn optimal_block_grows_at_reported_rate() {
    let model = CovarianceModel::fgn_with_alpha(0.4).unwrap();
    let theory = Theory::new(&model, &spec(Transform::Hermite(2)), BlockKind::Overlapping).unwrap();
    let a = theory.optimal_block(10_000).unwrap();
    let b = theory.optimal_block(1_000_000).unwrap();
    let slope = (b.ell / a.ell).ln() / 100f64.ln();
    assert!((slope - a.exponent).abs() < 1e-9);
    let report = theory.report(10_000).unwrap();
    assert_eq!(report.optimal.regime, a.regime);
    let mse = theory.mse(10_000, a.ell).unwrap();
    assert!(mse <= theory.mse(10_000, 0.8 * a.ell).unwrap());
    assert!(mse <= theory.mse(10_000, 1.25 * a.ell).unwrap());
}

#[test]
fn target_variance_tends_to_limit() {
    let model = CovarianceModel::farima_with_alpha(0.3).unwrap();
    let s = spec(Transform::Hermite(2));
    let limit = limit_variance(&model, &s).unwrap();
    let mut last = f64::INFINITY;
    for n in [1_000, 10_000, 100_000] {
        let err = (target_variance(&model, &s, n, 0.6).unwrap() - limit).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 0.05 * limit);
}

#[test]
fn trimmed_truth_matches_large_sample() {
    let law = MarginalLaw::new(Transform::Hermite(2));
    let truth = FunctionalSpec::Trimmed { delta: 0.2 }.truth(&law).unwrap();
    let f = FunctionalSpec::Trimmed { delta: 0.2 }.build().unwrap();
    let mut rng = stream_rng(21, 0);
    let y: Vec<f64> = (0..200_000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * z - 1.0
        })
        .collect();
    let est = f.evaluate(&y).unwrap();
    assert!((est - truth).abs() < 0.01, "{est} vs {truth}");
}

#[test]
fn trimmed_influence_has_even_rank_for_even_transform() {
    let p = ProcessSpec::new(GaussianFamily::Fgn, 0.3, Transform::Hermite(2));
    let s = FunctionalSpec::Trimmed { delta: 0.2 }.influence_spec(&p).unwrap();
    assert_eq!(s.rank, 2);
    let p = ProcessSpec::new(GaussianFamily::Fgn, 0.3, Transform::Sin);
    let s = FunctionalSpec::TrimmedExact { delta: 0.2 }.influence_spec(&p).unwrap();
    assert_eq!(s.rank, 1);
}
