//! Preset study designs for the standard simulation tables.

use super::{
    BlockPolicy, BootstrapConfig, CoverageConfig, FunctionalSpec, GaussianFamily, MseCurve,
    MseCurveConfig, PowerConfig, ProcessSpec, Table, VarianceMseConfig,
};
use crate::block_estimators::BlockKind;
use crate::block_selection::SelectionConfig;
use crate::lrd_sim::Transform;
use crate::rank_test::RankTestConfig;

/// Replicate counts `(default, full)` of each preset.
pub fn default_reps(table: &str, full: bool) -> usize {
    match (table, full) {
        ("table1" | "msecurve", false) => 1000,
        ("table1" | "msecurve", true) => 3000,
        (_, false) => 200,
        (_, true) => 500,
    }
}

/// Block lengths scanned for an MSE curve at sample size `n`.
pub fn curve_blocks(n: usize) -> Vec<usize> {
    (1..=(n / 20).clamp(2, 60)).collect()
}

fn fgn(alpha: f64, transform: Transform) -> ProcessSpec {
    ProcessSpec::new(GaussianFamily::Fgn, alpha, transform)
}

/// Hermite-rank 2 and 3 processes at three memory exponents each, `n` in {1000, 5000}.
pub fn table1(reps: usize, seed: u64) -> Vec<MseCurveConfig> {
    let designs = [
        (2, 0.4),
        (2, 0.425),
        (2, 0.45),
        (3, 0.3),
        (3, 0.315),
        (3, 0.33),
    ];
    let mut out = Vec::new();
    for (m, alpha) in designs {
        for n in [1000, 5000] {
            out.push(MseCurveConfig {
                process: fgn(alpha, Transform::Hermite(m)),
                n,
                kinds: vec![BlockKind::Overlapping, BlockKind::NonOverlapping],
                blocks: curve_blocks(n),
                reps,
                seed,
            });
        }
    }
    out
}

/// One row per curve and block scheme: the argmin block length, with the
/// minimal standardized MSE as the estimate.
pub fn table1_summary(curves: &[MseCurve]) -> Table {
    let mut t = Table::new(
        "table1",
        ["family", "process", "alpha", "n", "kind", "argmin_ell"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for c in curves {
        for &kind in &c.config.kinds {
            if let Some(p) = c.argmin(kind) {
                let mut labels = c.config.process.labels();
                labels.push(("n".into(), c.config.n.to_string()));
                labels.push(("kind".into(), kind.to_string()));
                labels.push(("argmin_ell".into(), p.ell.to_string()));
                t.push(labels, p.mse);
            }
        }
    }
    t
}

const SAMPLE_SIZES: [usize; 3] = [500, 1000, 2000];

fn block_policies() -> Vec<BlockPolicy> {
    vec![BlockPolicy::DataDriven, BlockPolicy::SqrtN]
}

/// Sample-mean variance estimation for `H_2` and `H_3` processes.
pub fn table2(reps: usize, seed: u64) -> VarianceMseConfig {
    VarianceMseConfig {
        processes: vec![
            fgn(0.2, Transform::Hermite(2)),
            fgn(0.45, Transform::Hermite(2)),
            fgn(0.2, Transform::Hermite(3)),
            fgn(0.3, Transform::Hermite(3)),
        ],
        ns: SAMPLE_SIZES.to_vec(),
        reps,
        seed,
        functional: FunctionalSpec::Mean,
        policies: block_policies(),
        kind: BlockKind::Overlapping,
        selection: SelectionConfig::default(),
        whittle_exponent: 0.7,
    }
}

/// Plug-in variance estimation for the 40% trimmed mean.
pub fn table4(reps: usize, seed: u64) -> VarianceMseConfig {
    VarianceMseConfig {
        processes: vec![
            fgn(0.2, Transform::Hermite(2)),
            fgn(0.45, Transform::Hermite(2)),
            fgn(0.2, Transform::Sin),
            fgn(0.3, Transform::Sin),
        ],
        functional: FunctionalSpec::Trimmed { delta: 0.2 },
        ..table2(reps, seed)
    }
}

/// Coverage of 95% bootstrap intervals for the mean and 40% trimmed mean; the
/// trimmed mean appears with both truncated and winsorized influence values.
pub fn table5(reps: usize, seed: u64) -> CoverageConfig {
    let mut processes = Vec::new();
    for t in [Transform::Sin, Transform::ZPlusH2Over20] {
        for alpha in [0.2, 0.5, 0.8] {
            processes.push(fgn(alpha, t));
        }
    }
    CoverageConfig {
        processes,
        ns: vec![1000, 5000],
        reps,
        seed,
        functionals: vec![
            FunctionalSpec::Mean,
            FunctionalSpec::Trimmed { delta: 0.2 },
            FunctionalSpec::TrimmedExact { delta: 0.2 },
        ],
        policies: block_policies(),
        bootstrap: BootstrapConfig::default(),
        selection: SelectionConfig::default(),
    }
}

/// Rank-one test on FARIMA-driven processes of rank 1 and 2.
pub fn table6(reps: usize, seed: u64) -> PowerConfig {
    let mut processes = Vec::new();
    for t in [Transform::MixedLow, Transform::Cos] {
        for alpha in [0.2, 0.8] {
            processes.push(ProcessSpec::new(GaussianFamily::Farima, alpha, t));
        }
    }
    PowerConfig {
        processes,
        ns: vec![400, 1000, 10000],
        kinds: vec![BlockKind::Overlapping, BlockKind::NonOverlapping],
        reps,
        seed,
        test: RankTestConfig::default(),
    }
}
