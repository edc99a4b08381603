//! Data-driven block length: local Whittle memory estimation, subsample
//! empirical MSE and two-scale extrapolation.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::block_estimators::{
    block_means, check_alpha_m, variance_estimator, BlockKind, BlockScheme,
};
use crate::error::{domain, parameter, Error, Result};
use crate::numerics::optimize::golden_section;

/// Bounds applied to the estimated scaling exponent.
pub const ALPHA_M_RANGE: (f64, f64) = (0.01, 0.99);

/// Local Whittle fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittleEstimate {
    /// Estimated memory parameter `d`.
    pub d: f64,
    /// `1 - 2d`, clamped to [`ALPHA_M_RANGE`].
    pub alpha_m: f64,
    /// True when the clamp was active.
    pub at_boundary: bool,
    pub bandwidth: usize,
}

/// Default Whittle bandwidth `floor(n^exponent)`, kept below `n/2`.
pub fn whittle_bandwidth(n: usize, exponent: f64) -> usize {
    let m = (n as f64).powf(exponent).floor() as usize;
    m.min((n.saturating_sub(1)) / 2)
}

/// Periodogram ordinates at Fourier frequencies `2 pi j / n`, `j = 1..=m`.
fn periodogram(series: &[f64], m: usize) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let norm = 2.0 * std::f64::consts::PI * n as f64;
    (1..=m).map(|j| buf[j].norm_sqr() / norm).collect()
}

/// Local Whittle estimate of the memory parameter from the first `bandwidth`
/// Fourier frequencies.
pub fn local_whittle(series: &[f64], bandwidth: usize) -> Result<WhittleEstimate> {
    let n = series.len();
    if bandwidth < 2 || 2 * bandwidth >= n {
        return Err(parameter(format!(
            "bandwidth {bandwidth} must be at least 2 and below n/2 = {}",
            n / 2
        )));
    }
    let mut pgram = periodogram(series, bandwidth);
    let total: f64 = pgram.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("periodogram vanishes".into()));
    }
    // Normalising makes the fit invariant to rescaling of the series.
    pgram.iter_mut().for_each(|v| *v /= total);
    let lambda: Vec<f64> = (1..=bandwidth)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n as f64)
        .collect();
    let mf = bandwidth as f64;
    let mean_log = lambda.iter().map(|l| l.ln()).sum::<f64>() / mf;
    let objective = |d: f64| {
        let s = lambda
            .iter()
            .zip(&pgram)
            .map(|(l, i)| l.powf(2.0 * d) * i)
            .sum::<f64>()
            / mf;
        s.ln() - 2.0 * d * mean_log
    };
    let (d, _) = golden_section(objective, -1.0, 1.0, 1e-10);
    let raw = 1.0 - 2.0 * d;
    let alpha_m = raw.clamp(ALPHA_M_RANGE.0, ALPHA_M_RANGE.1);
    Ok(WhittleEstimate {
        d,
        alpha_m,
        at_boundary: alpha_m != raw,
        bandwidth,
    })
}

/// Candidate block lengths searched inside subsamples of length `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    /// Up to this `h`, every integer in `2..=h/3` is a candidate.
    pub dense_limit: usize,
    /// Number of geometric points used above the dense limit.
    pub geometric_points: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            dense_limit: 200,
            geometric_points: 40,
        }
    }
}

/// Candidate grid for subsample length `h`.
pub fn candidate_grid(h: usize, policy: GridPolicy) -> Vec<usize> {
    let top = h / 3;
    if top < 2 {
        return Vec::new();
    }
    if h <= policy.dense_limit || top - 1 <= policy.geometric_points {
        return (2..=top).collect();
    }
    let k = policy.geometric_points.max(2);
    let ratio = (top as f64 / 2.0).ln() / (k - 1) as f64;
    let mut grid: Vec<usize> = (0..k)
        .map(|i| (2.0 * (ratio * i as f64).exp()).round() as usize)
        .map(|l| l.clamp(2, top))
        .collect();
    grid.dedup();
    grid
}

fn check_subsample(n: usize, h: usize, ell: usize) -> Result<()> {
    if h > n || h == 0 {
        return Err(parameter(format!("subsample length {h} not in 1..={n}")));
    }
    if ell == 0 || ell >= h {
        return Err(domain(format!("block length {ell} must be in 1..{h}")));
    }
    Ok(())
}

/// Mean over all `n - h + 1` length-`h` windows of `(V_window - pilot)^2`, where
/// `V_window` is the block variance estimator computed inside the window.
pub fn empirical_mse(
    series: &[f64],
    h: usize,
    ell: usize,
    kind: BlockKind,
    alpha_m: f64,
    pilot: f64,
) -> Result<f64> {
    let n = series.len();
    check_subsample(n, h, ell)?;
    check_alpha_m(alpha_m)?;
    let blocks = kind.block_count(h, ell);
    if blocks < 2 {
        return Err(Error::InsufficientBlocks(blocks));
    }
    let means = block_means(series, BlockScheme::overlapping(ell))?;
    let center = means.iter().sum::<f64>() / means.len() as f64;
    let scale = (ell as f64).powf(alpha_m);
    let windows = n - h + 1;
    let bf = blocks as f64;
    let mut total = 0.0;
    match kind {
        BlockKind::Overlapping => {
            // Window s uses block means s..s+blocks.
            let (p1, p2) = prefix_moments(means.iter().map(|m| m - center));
            for s in 0..windows {
                let s1 = p1[s + blocks] - p1[s];
                let s2 = p2[s + blocks] - p2[s];
                let v = scale * (s2 / bf - (s1 / bf).powi(2)).max(0.0);
                total += (v - pilot).powi(2);
            }
        }
        BlockKind::NonOverlapping => {
            // Window s uses block means s, s+ell, ..., one residue class mod ell.
            let classes: Vec<(Vec<f64>, Vec<f64>)> = (0..ell)
                .map(|r| {
                    prefix_moments(means.iter().skip(r).step_by(ell).map(|m| m - center))
                })
                .collect();
            for s in 0..windows {
                let (p1, p2) = &classes[s % ell];
                let q = s / ell;
                let s1 = p1[q + blocks] - p1[q];
                let s2 = p2[q + blocks] - p2[q];
                let v = scale * (s2 / bf - (s1 / bf).powi(2)).max(0.0);
                total += (v - pilot).powi(2);
            }
        }
    }
    Ok(total / windows as f64)
}

fn prefix_moments(values: impl Iterator<Item = f64>) -> (Vec<f64>, Vec<f64>) {
    let mut p1 = vec![0.0];
    let mut p2 = vec![0.0];
    let (mut a, mut b) = (0.0, 0.0);
    for v in values {
        a += v;
        b += v * v;
        p1.push(a);
        p2.push(b);
    }
    (p1, p2)
}

/// Evaluates [`empirical_mse`] at every grid point.
pub fn empirical_mse_curve(
    series: &[f64],
    h: usize,
    grid: &[usize],
    kind: BlockKind,
    alpha_m: f64,
    pilot: f64,
) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&ell| empirical_mse(series, h, ell, kind, alpha_m, pilot))
        .collect()
}

/// Grid minimiser of the empirical MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub ell: usize,
    pub value: f64,
    /// True when the minimiser is the first or last grid point.
    pub at_edge: bool,
}

/// Grid argmin of the empirical MSE, ties broken toward the smaller block.
pub fn minimize_empirical_mse(
    series: &[f64],
    h: usize,
    grid: &[usize],
    kind: BlockKind,
    alpha_m: f64,
    pilot: f64,
) -> Result<GridMinimum> {
    if grid.is_empty() {
        return Err(Error::Config("empty candidate grid".into()));
    }
    let values = empirical_mse_curve(series, h, grid, kind, alpha_m, pilot)?;
    Ok(argmin_grid(grid, &values))
}

pub(crate) fn argmin_grid(grid: &[usize], values: &[f64]) -> GridMinimum {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] || (*v == values[best] && grid[i] < grid[best]) {
            best = i;
        }
    }
    GridMinimum {
        ell: grid[best],
        value: values[best],
        at_edge: grid.len() > 1 && (best == 0 || best == grid.len() - 1),
    }
}

/// Tuning constants of the two-scale selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub c1: f64,
    pub c2: f64,
    pub theta: f64,
    pub r: f64,
    /// Pilot block `floor(n^pilot_exponent)`.
    pub pilot_exponent: f64,
    /// Whittle bandwidth `floor(n^whittle_exponent)`.
    pub whittle_exponent: f64,
    pub kind: BlockKind,
    pub grid: GridPolicy,
    /// Fixes the scaling exponent instead of estimating it.
    pub alpha_m: Option<f64>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            c1: 9.0,
            c2: 12.0,
            theta: 0.95,
            r: 2.0,
            pilot_exponent: 0.5,
            whittle_exponent: 0.7,
            kind: BlockKind::Overlapping,
            grid: GridPolicy::default(),
            alpha_m: None,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 2.0) {
            return Err(Error::Config("r must be at least 2".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config("theta must lie in (0, 1)".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Config("C1 and C2 must be positive".into()));
        }
        if let Some(a) = self.alpha_m {
            check_alpha_m(a)?;
        }
        Ok(())
    }

    /// Subsample lengths `(h, h2)` for sample size `n`.
    pub fn subsample_lengths(&self, n: usize) -> (usize, usize) {
        let nf = n as f64;
        (
            (self.c1 * nf.powf(1.0 / self.r)).floor() as usize,
            (self.c2 * nf.powf(self.theta / self.r)).floor() as usize,
        )
    }
}

/// Outcome of the two-scale extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub a: f64,
    /// Log-power estimate after clamping to `[-0.5, 1]`.
    pub i: f64,
    pub c: f64,
    pub ell_opt: f64,
}

/// Extrapolates two subsample minimisers to the full sample.
///
/// `h` is taken as `c1 n^{1/r}`, which fixes the implied `n`.
pub fn two_scale_extrapolation(
    ell_h: f64,
    ell_h2: f64,
    h: f64,
    h2: f64,
    c1: f64,
    r: f64,
) -> Result<Extrapolation> {
    if !(ell_h > 0.0 && ell_h2 > 0.0) {
        return Err(parameter("minimisers must be positive"));
    }
    if !(h > 1.0 && h2 > 1.0) || h == h2 {
        return Err(Error::Config(format!(
            "subsample lengths must exceed 1 and differ (h = {h}, h2 = {h2})"
        )));
    }
    let lhh = (h / h2).ln();
    let a = (ell_h / ell_h2).ln() / lhh;
    let raw_i = 0.5
        * ((ell_h.ln() - a * h.ln()) / h.ln().ln() + (ell_h2.ln() - a * h2.ln()) / h2.ln().ln());
    let i = if raw_i.is_finite() {
        raw_i.clamp(-0.5, 1.0)
    } else {
        0.0
    };
    let c = r.powf(i) * (h2.ln() / h.ln()).powf((r - 1.0) * i * h.ln() / lhh);
    let ell_opt = (ell_h / c1.powf(a)).powf(r) * (h.powf(a) / ell_h).powf(r - 1.0) * c;
    Ok(Extrapolation { a, i, c, ell_opt })
}

/// `min(floor(n/20), floor(ell_opt))`, at least one.
pub fn final_block_rule(ell_opt: f64, n: usize) -> usize {
    let cap = n / 20;
    let raw = if ell_opt.is_finite() && ell_opt > 0.0 {
        ell_opt.floor().min(usize::MAX as f64) as usize
    } else {
        1
    };
    raw.min(cap).max(1)
}

/// Every intermediate of one block selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub n: usize,
    pub alpha_m: f64,
    pub alpha_m_at_boundary: bool,
    pub h: usize,
    pub h2: usize,
    pub pilot_block: usize,
    pub pilot_value: f64,
    pub ell_h: usize,
    pub ell_h2: usize,
    pub edge_h: bool,
    pub edge_h2: bool,
    pub a: f64,
    pub i: f64,
    pub c: f64,
    pub ell_opt: f64,
    pub ell: usize,
}

impl SelectionResult {
    /// `(name, value)` pairs in a fixed order, for CSV output.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("alpha_m", self.alpha_m.to_string()),
            ("alpha_m_at_boundary", self.alpha_m_at_boundary.to_string()),
            ("h", self.h.to_string()),
            ("h2", self.h2.to_string()),
            ("pilot_block", self.pilot_block.to_string()),
            ("pilot_value", self.pilot_value.to_string()),
            ("ell_h", self.ell_h.to_string()),
            ("ell_h2", self.ell_h2.to_string()),
            ("edge_h", self.edge_h.to_string()),
            ("edge_h2", self.edge_h2.to_string()),
            ("a", self.a.to_string()),
            ("i", self.i.to_string()),
            ("c", self.c.to_string()),
            ("ell_opt", self.ell_opt.to_string()),
            ("ell", self.ell.to_string()),
        ]
    }
}

/// Full data-driven selection on one series.
pub fn two_scale_block_estimate(series: &[f64], config: &SelectionConfig) -> Result<SelectionResult> {
    config.validate()?;
    let n = series.len();
    let (h, h2) = config.subsample_lengths(n);
    if h2 < 8 || h < 8 {
        return Err(Error::Config(format!(
            "n = {n} too small: subsample lengths {h} and {h2} must be at least 8"
        )));
    }
    if h == h2 {
        return Err(Error::Config(format!("subsample lengths coincide (h = h2 = {h})")));
    }
    if h > n || h2 > n {
        return Err(Error::Config(format!(
            "subsample lengths {h}, {h2} exceed n = {n}"
        )));
    }
    let pilot_block = ((n as f64).powf(config.pilot_exponent).floor() as usize).max(1);
    let (alpha_m, at_boundary) = match config.alpha_m {
        Some(a) => (a, false),
        None => {
            let w = local_whittle(series, whittle_bandwidth(n, config.whittle_exponent))?;
            (w.alpha_m, w.at_boundary)
        }
    };
    let pilot = variance_estimator(series, BlockScheme::new(config.kind, pilot_block), alpha_m)?.value;
    let grid_h = candidate_grid(h, config.grid);
    let grid_h2 = candidate_grid(h2, config.grid);
    let min_h = minimize_empirical_mse(series, h, &grid_h, config.kind, alpha_m, pilot)?;
    let min_h2 = minimize_empirical_mse(series, h2, &grid_h2, config.kind, alpha_m, pilot)?;
    let ex = two_scale_extrapolation(
        min_h.ell as f64,
        min_h2.ell as f64,
        h as f64,
        h2 as f64,
        config.c1,
        config.r,
    )?;
    Ok(SelectionResult {
        n,
        alpha_m,
        alpha_m_at_boundary: at_boundary,
        h,
        h2,
        pilot_block,
        pilot_value: pilot,
        ell_h: min_h.ell,
        ell_h2: min_h2.ell,
        edge_h: min_h.at_edge,
        edge_h2: min_h2.at_edge,
        a: ex.a,
        i: ex.i,
        c: ex.c,
        ell_opt: ex.ell_opt,
        ell: final_block_rule(ex.ell_opt, n),
    })
}
