//! Seeded Monte Carlo studies of the block estimators, the bootstrap intervals
//! and the rank test, with CSV output.

mod bootstrap;
mod law;
mod output;
mod studies;
pub mod tables;

use serde::{Deserialize, Serialize};

use crate::block_selection::{local_whittle, two_scale_block_estimate, whittle_bandwidth, SelectionConfig};
use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::hermite::{hermite_coefficients, HermiteSpec};
use crate::lrd_sim::{CovarianceModel, GaussianSampler, Transform};
use crate::numerics::rng::{derive_seed, stream_rng};

pub use bootstrap::{bootstrap_ci, BootstrapConfig, ConfidenceInterval};
pub use law::MarginalLaw;
pub use output::{config_hash, write_manifest, Manifest};
pub use studies::{
    coverage_study, mse_curve, rank_test_power, variance_mse_table, CoverageConfig, CurvePoint,
    MseCurve, MseCurveConfig, PowerConfig, VarianceMseConfig,
};

/// Hermite order kept when expanding transformations.
pub const EXPANSION_ORDER: usize = 40;

/// Gaussian driving process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaussianFamily {
    Fgn,
    Farima,
}

impl GaussianFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fgn" => Ok(GaussianFamily::Fgn),
            "farima" => Ok(GaussianFamily::Farima),
            other => Err(Error::Config(format!("unknown Gaussian family '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaussianFamily::Fgn => "fgn",
            GaussianFamily::Farima => "farima",
        }
    }
}

/// `X_t = G(Z_t)` with `Z` from `family` at memory exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub family: GaussianFamily,
    pub alpha: f64,
    pub transform: Transform,
}

impl ProcessSpec {
    pub fn new(family: GaussianFamily, alpha: f64, transform: Transform) -> Self {
        Self {
            family,
            alpha,
            transform,
        }
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        match self.family {
            GaussianFamily::Fgn => CovarianceModel::fgn_with_alpha(self.alpha),
            GaussianFamily::Farima => CovarianceModel::farima_with_alpha(self.alpha),
        }
    }

    /// Hermite expansion of `G`.
    pub fn spec(&self) -> Result<HermiteSpec> {
        let g = self.transform;
        hermite_coefficients(move |z| g.apply(z), EXPANSION_ORDER)
    }

    fn labels(&self) -> Vec<(String, String)> {
        vec![
            ("family".into(), self.family.name().into()),
            ("process".into(), self.transform.name()),
            ("alpha".into(), self.alpha.to_string()),
        ]
    }
}

/// Serializable choice of functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionalSpec {
    Mean,
    /// Symmetric trimmed mean discarding `delta` in each tail, with the
    /// truncated influence values `Y 1{band} / (1 - 2 delta)`.
    Trimmed { delta: f64 },
    /// The same statistic with winsorized (exact) influence values.
    TrimmedExact { delta: f64 },
}

impl FunctionalSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number in '{s}': {e}")))
        };
        match t.split_once(':') {
            None if t == "mean" => Ok(FunctionalSpec::Mean),
            Some(("trimmed", v)) => Ok(FunctionalSpec::Trimmed { delta: num(v)? }),
            Some(("trimmed-exact", v)) => Ok(FunctionalSpec::TrimmedExact { delta: num(v)? }),
            _ => Err(Error::Config(format!("unknown functional '{s}'"))),
        }
    }

    pub fn build(&self) -> Result<Functional> {
        match self {
            FunctionalSpec::Mean => Ok(Functional::mean()),
            FunctionalSpec::Trimmed { delta } => Functional::trimmed_mean(*delta),
            FunctionalSpec::TrimmedExact { delta } => Functional::trimmed_mean_exact(*delta),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FunctionalSpec::Mean => "mean".into(),
            FunctionalSpec::Trimmed { delta } => format!("trimmed:{delta}"),
            FunctionalSpec::TrimmedExact { delta } => format!("trimmed-exact:{delta}"),
        }
    }

    /// Parameter `T(F)` of the marginal law of the process.
    pub fn truth(&self, law: &MarginalLaw) -> Result<f64> {
        match self {
            FunctionalSpec::Mean => law.mean(),
            FunctionalSpec::Trimmed { delta } | FunctionalSpec::TrimmedExact { delta } => {
                law.trimmed_mean(*delta, 1.0 - delta)
            }
        }
    }

    /// Hermite expansion of the exact influence function `IF(G(z), F)`, which
    /// determines the variance of the statistic to first order.
    pub fn influence_spec(&self, process: &ProcessSpec) -> Result<HermiteSpec> {
        match self {
            FunctionalSpec::Mean => process.spec(),
            FunctionalSpec::Trimmed { delta } | FunctionalSpec::TrimmedExact { delta } => {
                MarginalLaw::new(process.transform).trimmed_influence_spec(
                    *delta,
                    1.0 - delta,
                    EXPANSION_ORDER,
                )
            }
        }
    }
}

/// How the block length is chosen for each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockPolicy {
    Fixed(usize),
    /// `floor(sqrt(n))`.
    SqrtN,
    /// Two-scale subsample selection.
    DataDriven,
}

impl BlockPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sqrt" => Ok(BlockPolicy::SqrtN),
            "auto" => Ok(BlockPolicy::DataDriven),
            t => t
                .parse::<usize>()
                .ok()
                .filter(|&l| l > 0)
                .map(BlockPolicy::Fixed)
                .ok_or_else(|| Error::Config(format!("unknown block policy '{s}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BlockPolicy::Fixed(l) => l.to_string(),
            BlockPolicy::SqrtN => "sqrt".into(),
            BlockPolicy::DataDriven => "auto".into(),
        }
    }

    /// Block length for `series` given a memory estimate.
    pub fn resolve(&self, series: &[f64], alpha_m: f64, selection: &SelectionConfig) -> Result<usize> {
        let n = series.len();
        match self {
            BlockPolicy::Fixed(l) => Ok(*l),
            BlockPolicy::SqrtN => Ok(((n as f64).sqrt().floor() as usize).max(1)),
            BlockPolicy::DataDriven => {
                let cfg = SelectionConfig {
                    alpha_m: Some(alpha_m),
                    ..*selection
                };
                Ok(two_scale_block_estimate(series, &cfg)?.ell)
            }
        }
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub estimate: f64,
    pub mc_se: f64,
    pub reps: usize,
}

impl McSummary {
    /// Sample mean and `sd / sqrt(R)` of replicate outcomes.
    pub fn from_values(values: &[f64]) -> Self {
        let r = values.len();
        let mean = values.iter().sum::<f64>() / r as f64;
        let var = if r > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64
        } else {
            0.0
        };
        Self {
            estimate: mean,
            mc_se: (var / r as f64).sqrt(),
            reps: r,
        }
    }

    /// Proportion of true outcomes with the binomial standard error.
    pub fn from_rate(hits: usize, reps: usize) -> Self {
        let p = hits as f64 / reps as f64;
        Self {
            estimate: p,
            mc_se: (p * (1.0 - p) / reps as f64).sqrt(),
            reps,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub labels: Vec<String>,
    pub summary: McSummary,
}

/// A labelled grid of Monte Carlo summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, labels: Vec<(String, String)>, summary: McSummary) {
        debug_assert_eq!(
            labels.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(),
            self.columns.iter().map(String::as_str).collect::<Vec<_>>()
        );
        self.rows.push(Row {
            labels: labels.into_iter().map(|(_, v)| v).collect(),
            summary,
        });
    }

    /// First row whose labels match every `(column, value)` pair.
    pub fn find(&self, pairs: &[(&str, &str)]) -> Option<&Row> {
        self.rows.iter().find(|row| {
            pairs.iter().all(|(k, v)| {
                self.columns
                    .iter()
                    .position(|c| c == k)
                    .is_some_and(|i| row.labels[i] == *v)
            })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push_str(",estimate,mc_se,reps\n");
        for row in &self.rows {
            for l in &row.labels {
                out.push_str(l);
                out.push(',');
            }
            out.push_str(&format!(
                "{},{},{}\n",
                row.summary.estimate, row.summary.mc_se, row.summary.reps
            ));
        }
        out
    }
}

/// Seed of a cell, derived from its labels so it does not depend on the
/// position of the cell in a grid.
pub(crate) fn cell_seed(seed: u64, labels: &[(String, String)]) -> u64 {
    // FNV-1a over the label text.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (k, v) in labels {
        for byte in k.bytes().chain([b'=']).chain(v.bytes()).chain([b';']) {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    derive_seed(seed, h)
}

/// Draws replicate `rep` of a process path.
pub(crate) struct ProcessSampler {
    sampler: GaussianSampler,
    transform: Transform,
    seed: u64,
}

impl ProcessSampler {
    pub(crate) fn new(process: &ProcessSpec, n: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            sampler: GaussianSampler::new(&process.model()?, n)?,
            transform: process.transform,
            seed,
        })
    }

    pub(crate) fn draw(&self, rep: u64) -> Vec<f64> {
        let mut rng = stream_rng(self.seed, rep);
        let mut z = self.sampler.sample(&mut rng);
        z.iter_mut().for_each(|v| *v = self.transform.apply(*v));
        z
    }
}

/// Local Whittle scaling exponent with bandwidth `floor(n^exponent)`.
pub(crate) fn estimate_alpha_m(series: &[f64], exponent: f64) -> Result<f64> {
    Ok(local_whittle(series, whittle_bandwidth(series.len(), exponent))?.alpha_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_values() {
        let s = McSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.estimate, 2.5);
        assert!((s.mc_se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let r = McSummary::from_rate(30, 100);
        assert!((r.mc_se - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t", vec!["a".into(), "b".into()]);
        t.push(
            vec![("a".into(), "x".into()), ("b".into(), "1".into())],
            McSummary::from_values(&[1.0, 1.0]),
        );
        assert_eq!(t.to_csv(), "a,b,estimate,mc_se,reps\nx,1,1,0,2\n");
        assert!(t.find(&[("a", "x")]).is_some());
        assert!(t.find(&[("a", "y")]).is_none());
    }

    #[test]
    fn cell_seeds_depend_on_labels_only() {
        let a = vec![("n".to_string(), "10".to_string())];
        let b = vec![("n".to_string(), "11".to_string())];
        assert_eq!(cell_seed(1, &a), cell_seed(1, &a));
        assert_ne!(cell_seed(1, &a), cell_seed(1, &b));
        assert_ne!(cell_seed(1, &a), cell_seed(2, &a));
    }

    #[test]
    fn policy_parse() {
        assert_eq!(BlockPolicy::parse("auto").unwrap(), BlockPolicy::DataDriven);
        assert_eq!(BlockPolicy::parse("12").unwrap(), BlockPolicy::Fixed(12));
        assert!(BlockPolicy::parse("0").is_err());
    }
}
