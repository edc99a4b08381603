//! Replicated studies: MSE curves, variance-estimator MSE, interval coverage
//! and rank-test rejection rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bootstrap_ci, cell_seed, estimate_alpha_m, BlockPolicy, BootstrapConfig, FunctionalSpec,
    MarginalLaw, McSummary, ProcessSampler, ProcessSpec, Table,
};
use crate::block_estimators::{target_variance, variance_estimator, BlockKind, BlockScheme};
use crate::block_selection::SelectionConfig;
use crate::error::{Error, Result};
use crate::numerics::rng::derive_seed;
use crate::rank_test::{rank_test, RankTestConfig};

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    Ok(())
}

fn with(mut labels: Vec<(String, String)>, key: &str, value: impl ToString) -> Vec<(String, String)> {
    labels.push((key.into(), value.to_string()));
    labels
}

fn columns(keys: &[&str]) -> Vec<String> {
    keys.iter().map(|k| k.to_string()).collect()
}

// Column `j` of a replicate-by-outcome matrix.
fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurveConfig {
    pub process: ProcessSpec,
    pub n: usize,
    pub kinds: Vec<BlockKind>,
    pub blocks: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub kind: BlockKind,
    pub ell: usize,
    pub mse: McSummary,
}

/// Standardized MSE `E(V_l - v)^2 / v^2` over block lengths, using the true
/// scaling exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub config: MseCurveConfig,
    pub target: f64,
    pub alpha_m: f64,
    pub points: Vec<CurvePoint>,
    /// Paired differences NOL minus OL per block length, when both are present.
    pub gaps: Vec<(usize, McSummary)>,
}

impl MseCurve {
    pub fn curve(&self, kind: BlockKind) -> Vec<CurvePoint> {
        self.points.iter().copied().filter(|p| p.kind == kind).collect()
    }

    /// Block length with the smallest estimated MSE (ties to the smaller).
    pub fn argmin(&self, kind: BlockKind) -> Option<CurvePoint> {
        self.curve(kind)
            .into_iter()
            .fold(None, |best: Option<CurvePoint>, p| match best {
                Some(b) if b.mse.estimate <= p.mse.estimate => Some(b),
                _ => Some(p),
            })
    }

    pub fn to_table(&self, name: &str) -> Table {
        let mut t = Table::new(name, columns(&["family", "process", "alpha", "n", "kind", "ell"]));
        let base = with(self.config.process.labels(), "n", self.config.n);
        for p in &self.points {
            t.push(with(with(base.clone(), "kind", p.kind), "ell", p.ell), p.mse);
        }
        t
    }
}

pub fn mse_curve(config: &MseCurveConfig) -> Result<MseCurve> {
    check_reps(config.reps)?;
    let n = config.n;
    if config.kinds.is_empty() || config.blocks.is_empty() {
        return Err(Error::Config("no block schemes or lengths requested".into()));
    }
    for &kind in &config.kinds {
        for &ell in &config.blocks {
            if kind.block_count(n, ell) < 2 {
                return Err(Error::BlockLength { ell, n });
            }
        }
    }
    let process = config.process;
    let model = process.model()?;
    let spec = process.spec()?;
    let alpha_m = process.alpha * spec.rank as f64;
    let target = target_variance(&model, &spec, n, alpha_m)?;
    let seed = cell_seed(config.seed, &with(process.labels(), "n", n));
    let sampler = ProcessSampler::new(&process, n, seed)?;
    let outcomes: Vec<Vec<f64>> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = sampler.draw(rep);
            let mut row = Vec::with_capacity(config.kinds.len() * config.blocks.len());
            for &kind in &config.kinds {
                for &ell in &config.blocks {
                    let v = variance_estimator(&x, BlockScheme::new(kind, ell), alpha_m)?.value;
                    row.push(((v - target) / target).powi(2));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let nb = config.blocks.len();
    let mut points = Vec::new();
    for (ki, &kind) in config.kinds.iter().enumerate() {
        for (bi, &ell) in config.blocks.iter().enumerate() {
            points.push(CurvePoint {
                kind,
                ell,
                mse: McSummary::from_values(&column(&outcomes, ki * nb + bi)),
            });
        }
    }
    let mut gaps = Vec::new();
    let ol = config.kinds.iter().position(|k| *k == BlockKind::Overlapping);
    let nol = config.kinds.iter().position(|k| *k == BlockKind::NonOverlapping);
    if let (Some(o), Some(q)) = (ol, nol) {
        for (bi, &ell) in config.blocks.iter().enumerate() {
            let diff: Vec<f64> = outcomes
                .iter()
                .map(|r| r[q * nb + bi] - r[o * nb + bi])
                .collect();
            gaps.push((ell, McSummary::from_values(&diff)));
        }
    }
    Ok(MseCurve {
        config: config.clone(),
        target,
        alpha_m,
        points,
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceMseConfig {
    pub processes: Vec<ProcessSpec>,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub functional: FunctionalSpec,
    pub policies: Vec<BlockPolicy>,
    pub kind: BlockKind,
    pub selection: SelectionConfig,
    pub whittle_exponent: f64,
}

/// Standardized MSE of the plug-in block estimator with an estimated scaling
/// exponent, against the exact scaled variance of the linearised statistic.
pub fn variance_mse_table(config: &VarianceMseConfig) -> Result<Table> {
    check_reps(config.reps)?;
    let functional = config.functional.build()?;
    let mut table = Table::new(
        "variance_mse",
        columns(&["family", "process", "alpha", "functional", "n", "policy"]),
    );
    for process in &config.processes {
        let model = process.model()?;
        let spec = config.functional.influence_spec(process)?;
        let alpha_m = process.alpha * spec.rank as f64;
        for &n in &config.ns {
            let target = target_variance(&model, &spec, n, alpha_m)?;
            let seed = cell_seed(config.seed, &with(process.labels(), "n", n));
            let sampler = ProcessSampler::new(process, n, seed)?;
            let outcomes: Vec<Vec<f64>> = (0..config.reps as u64)
                .into_par_iter()
                .map(|rep| {
                    let y = sampler.draw(rep);
                    let x = functional.influence_estimates(&y)?;
                    let am = estimate_alpha_m(&x, config.whittle_exponent)?;
                    config
                        .policies
                        .iter()
                        .map(|policy| {
                            let ell = policy.resolve(&x, am, &config.selection)?;
                            let v = variance_estimator(&x, BlockScheme::new(config.kind, ell), am)?.value;
                            Ok(((v - target) / target).powi(2))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            for (j, policy) in config.policies.iter().enumerate() {
                let labels = with(
                    with(with(process.labels(), "functional", config.functional.name()), "n", n),
                    "policy",
                    policy.name(),
                );
                table.push(labels, McSummary::from_values(&column(&outcomes, j)));
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub processes: Vec<ProcessSpec>,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub functionals: Vec<FunctionalSpec>,
    pub policies: Vec<BlockPolicy>,
    pub bootstrap: BootstrapConfig,
    pub selection: SelectionConfig,
}

/// Empirical coverage of bootstrap intervals for the true functional value.
pub fn coverage_study(config: &CoverageConfig) -> Result<Table> {
    check_reps(config.reps)?;
    let functionals = config
        .functionals
        .iter()
        .map(FunctionalSpec::build)
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "coverage",
        columns(&["family", "process", "alpha", "functional", "n", "policy"]),
    );
    for process in &config.processes {
        let law = MarginalLaw::new(process.transform);
        let truths = config
            .functionals
            .iter()
            .map(|f| f.truth(&law))
            .collect::<Result<Vec<_>>>()?;
        for &n in &config.ns {
            let seed = cell_seed(config.seed, &with(process.labels(), "n", n));
            let sampler = ProcessSampler::new(process, n, seed)?;
            let outcomes: Vec<Vec<f64>> = (0..config.reps as u64)
                .into_par_iter()
                .map(|rep| {
                    let y = sampler.draw(rep);
                    let mut row = Vec::new();
                    for (f, &truth) in functionals.iter().zip(&truths) {
                        let x = f.influence_estimates(&y)?;
                        let am = estimate_alpha_m(&x, config.bootstrap.whittle_exponent)?;
                        let boot = BootstrapConfig {
                            alpha_m: Some(am),
                            seed: derive_seed(seed, rep),
                            ..config.bootstrap
                        };
                        for policy in &config.policies {
                            let ell = policy.resolve(&x, am, &config.selection)?;
                            let ci = bootstrap_ci(&y, f, ell, &boot)?;
                            row.push(if ci.contains(truth) { 1.0 } else { 0.0 });
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<_>>()?;
            let np = config.policies.len();
            for (fi, fspec) in config.functionals.iter().enumerate() {
                for (pi, policy) in config.policies.iter().enumerate() {
                    let hits = column(&outcomes, fi * np + pi).iter().filter(|&&v| v > 0.5).count();
                    let labels = with(
                        with(with(process.labels(), "functional", fspec.name()), "n", n),
                        "policy",
                        policy.name(),
                    );
                    table.push(labels, McSummary::from_rate(hits, config.reps));
                }
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub processes: Vec<ProcessSpec>,
    pub ns: Vec<usize>,
    pub kinds: Vec<BlockKind>,
    pub reps: usize,
    pub seed: u64,
    /// Template; block scheme and seed are set per cell and replicate.
    pub test: RankTestConfig,
}

/// Rejection rates of the rank test.
pub fn rank_test_power(config: &PowerConfig) -> Result<Table> {
    check_reps(config.reps)?;
    let mut table = Table::new("rank_test", columns(&["family", "process", "alpha", "n", "kind"]));
    for process in &config.processes {
        for &n in &config.ns {
            let seed = cell_seed(config.seed, &with(process.labels(), "n", n));
            let sampler = ProcessSampler::new(process, n, seed)?;
            let outcomes: Vec<Vec<f64>> = (0..config.reps as u64)
                .into_par_iter()
                .map(|rep| {
                    let y = sampler.draw(rep);
                    config
                        .kinds
                        .iter()
                        .map(|&kind| {
                            let test = RankTestConfig {
                                kind,
                                seed: derive_seed(seed, rep),
                                ..config.test
                            };
                            Ok(if rank_test(&y, &test)?.reject { 1.0 } else { 0.0 })
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            for (k, kind) in config.kinds.iter().enumerate() {
                let hits = column(&outcomes, k).iter().filter(|&&v| v > 0.5).count();
                let labels = with(with(process.labels(), "n", n), "kind", kind);
                table.push(labels, McSummary::from_rate(hits, config.reps));
            }
        }
    }
    Ok(table)
}
