//! Large-sample bias, variance and optimal block length of the block variance
//! estimators.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::block_estimators::{limit_variance_order, BlockKind};
use crate::error::{domain, parameter, Error, Result};
use crate::hermite::{HermiteSpec, Rank};
use crate::lrd_sim::CovarianceModel;
use crate::numerics::quadrature::integrate;
use crate::numerics::series::{sum_power_tail, SeriesSum};
use crate::numerics::special::{factorial, zeta};

/// Tolerance used to decide that an exponent sits exactly on a boundary such as
/// `alpha = 1/2` or `alpha m2 = 1`.
pub const BOUNDARY_TOL: f64 = 1e-12;

const SERIES_REL_TOL: f64 = 1e-10;
const SERIES_MAX_TERMS: u64 = 1 << 26;

fn on_boundary(x: f64, at: f64) -> bool {
    (x - at).abs() <= BOUNDARY_TOL
}

/// `lim_K (Σ_{k≤K} k^{-s} - K^{1-s}/(1-s))` for `s` in `(0, 1)`.
pub fn euler_generalized_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain(format!("exponent {s} not in (0, 1)")));
    }
    Ok(zeta(s))
}

/// `Σ_{k>=1} gamma(k)^p`, regularised by analytic continuation when `alpha p < 1`.
///
/// Split as `c0^p [zeta(alpha p) + Σ k^{-alpha p} ((1 + delta(k))^p - 1)]`, where the
/// second series converges absolutely for every supported model.
pub fn regularized_power_sum(model: &CovarianceModel, p: usize) -> Result<SeriesSum> {
    let s = model.alpha() * p as f64;
    if on_boundary(s, 1.0) {
        return Err(domain("power sum diverges logarithmically at alpha p = 1"));
    }
    let pf = p as f64;
    let z = zeta(s);
    let corr = sum_power_tail(
        |k| {
            let d = model.relative_correction(k);
            (k as f64).powf(-s) * (pf * d.ln_1p()).exp_m1()
        },
        1,
        1e-12 * z.abs(),
        SERIES_REL_TOL,
        SERIES_MAX_TERMS,
    )?;
    let scale = model.scale().powi(p as i32);
    Ok(SeriesSum {
        value: scale * (z + corr.value),
        bound: scale * corr.bound,
        terms: corr.terms,
    })
}

/// Bias constants of the block variance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasConstants {
    /// Coefficient of `l^{alpha m - 1}`.
    pub b0: f64,
    /// Coefficient of the second-rank term, absent when `m2` is infinite.
    pub b1: Option<f64>,
    /// Accumulated bound on series truncation error.
    pub bound: f64,
}

/// Computes the bias constants for the mean of `G(Z)` under `model`.
pub fn bias_constants(model: &CovarianceModel, spec: &HermiteSpec) -> Result<BiasConstants> {
    let alpha = model.alpha();
    let m = spec.rank;
    let am = alpha * m as f64;
    if !(am > 0.0 && am < 1.0) {
        return Err(domain(format!("alpha * m = {am} not in (0, 1)")));
    }
    let lead = regularized_power_sum(model, m)?;
    let b0 = 2.0 * spec.weight(m) * lead.value + spec.variance;
    let mut bound = 2.0 * spec.weight(m) * lead.bound;
    let b1 = match spec.second_rank {
        Rank::Infinite => None,
        Rank::Finite(m2) => {
            let am2 = alpha * m2 as f64;
            Some(if on_boundary(am2, 1.0) {
                2.0 * model.scale().powi(m2 as i32) * spec.weight(m2)
            } else if am2 > 1.0 {
                let mut total = 0.0;
                for j in spec.active_orders().into_iter().filter(|&j| j >= m2) {
                    let sj = regularized_power_sum(model, j)?;
                    total += 2.0 * spec.weight(j) * sj.value;
                    bound += 2.0 * spec.weight(j) * sj.bound;
                }
                total
            } else {
                limit_variance_order(model, spec.weight(m2), m2)
            })
        }
    };
    Ok(BiasConstants { b0, b1, bound })
}

/// `g(x) = (|x+1|^a - 2|x|^a + |x-1|^a) / 2` with `a = 2 - alpha`.
fn increment_covariance(a: f64, x: f64) -> f64 {
    let x = x.abs();
    0.5 * ((x + 1.0).powf(a) - 2.0 * x.powf(a) + (x - 1.0).abs().powf(a))
}

/// `∫_R g(x)^2 dx` for `alpha` in `(1/2, 1)`.
fn increment_covariance_l2(alpha: f64) -> Result<f64> {
    let a = 2.0 - alpha;
    let g2 = |x: f64| increment_covariance(a, x).powi(2);
    let (i1, _) = integrate(g2, 0.0, 1.0, 1e-14, 1e-13)?;
    const X: f64 = 8.0;
    let (i2, _) = integrate(g2, 1.0, X, 1e-14, 1e-13)?;
    // For x > 1, g(x) = Σ_{j>=1} b_j x^{a-2j}; integrate the squared series termwise.
    let b: Vec<f64> = (1..=30)
        .map(|j| {
            let mut v = 1.0;
            for i in 0..2 * j {
                v *= (a - i as f64) / (i as f64 + 1.0);
            }
            v
        })
        .collect();
    let mut tail = 0.0;
    for (i, bi) in b.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let e = 2.0 * a - 2.0 * (i + j + 2) as f64 + 1.0;
            tail += bi * bj * X.powf(e) / -e;
        }
    }
    Ok(2.0 * (i1 + i2 + tail))
}

/// Variance constants of the block variance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceConstants {
    /// Leading coefficient: the rank-`m >= 2` constant or the rank-one constant.
    pub leading: f64,
    /// Coefficient of the cross term driven by adjacent Hermite orders.
    pub lambda: Option<f64>,
    pub bound: f64,
}

fn rank_one_constant(model: &CovarianceModel, spec: &HermiteSpec, kind: BlockKind) -> Result<f64> {
    let alpha = model.alpha();
    let c0 = model.scale();
    let j1 = spec.coefficient(1);
    let pre = 8.0 * j1.powi(4) * c0 * c0 / ((1.0 - alpha).powi(2) * (2.0 - alpha).powi(2));
    let factor = if on_boundary(alpha, 0.5) {
        9.0 / 32.0
    } else if alpha < 0.5 {
        1.0 + (2.0 - alpha).powi(2) * (2.0 * alpha * alpha + 3.0 * alpha - 1.0)
            / (4.0 * (1.0 - 2.0 * alpha) * (3.0 - 2.0 * alpha))
            - gamma(3.0 - alpha).powi(2) / gamma(4.0 - 2.0 * alpha)
    } else {
        match kind {
            BlockKind::NonOverlapping => {
                let inc = CovarianceModel::fgn(1.0 - alpha / 2.0)?;
                1.0 + 2.0 * regularized_power_sum(&inc, 2)?.value
            }
            BlockKind::Overlapping => increment_covariance_l2(alpha)?,
        }
    };
    Ok(pre * factor)
}

/// Computes the variance constants for the given block arrangement.
pub fn variance_constants(
    model: &CovarianceModel,
    spec: &HermiteSpec,
    kind: BlockKind,
) -> Result<VarianceConstants> {
    let alpha = model.alpha();
    let m = spec.rank;
    let am = alpha * m as f64;
    if !(am > 0.0 && am < 1.0) {
        return Err(domain(format!("alpha * m = {am} not in (0, 1)")));
    }
    let c0 = model.scale();
    let leading = if m >= 2 {
        let mf = m as f64;
        let inner = 2.0 * spec.coefficient(m).powi(2) * c0.powi(m as i32)
            / factorial(m - 1)
            / ((1.0 - (mf - 1.0) * alpha) * (2.0 - (mf - 1.0) * alpha));
        2.0 / ((1.0 - 2.0 * alpha) * (1.0 - alpha)) * inner * inner
    } else {
        rank_one_constant(model, spec, kind)?
    };
    let mut bound = 0.0;
    let lambda = match spec.pair_rank {
        Rank::Infinite => None,
        Rank::Finite(mp) => {
            let pre = 8.0 * c0 / ((1.0 - alpha) * (2.0 - alpha));
            let amp = alpha * mp as f64;
            let inner = if amp <= 1.0 + BOUNDARY_TOL {
                let base = 2.0 * c0.powi(mp as i32) * spec.coefficient(mp) * spec.coefficient(mp + 1)
                    / factorial(mp);
                if on_boundary(amp, 1.0) {
                    base * base
                } else {
                    (base / ((1.0 - amp) * (2.0 - amp))).powi(2)
                }
            } else {
                let mut s = 0.0;
                for k in mp..spec.max_order() {
                    let jj = spec.coefficient(k) * spec.coefficient(k + 1);
                    if jj == 0.0 {
                        continue;
                    }
                    let sk = regularized_power_sum(model, k)?;
                    bound += 2.0 * sk.bound * jj.abs() / factorial(k);
                    s += (1.0 + 2.0 * sk.value) * jj / factorial(k);
                }
                s * s
            };
            Some(pre * inner)
        }
    };
    Ok(VarianceConstants {
        leading,
        lambda,
        bound,
    })
}

/// Leading-order growth `n^exponent (ln n)^log_power` of the optimal block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalBlock {
    pub ell: f64,
    pub constant: f64,
    pub exponent: f64,
    pub log_power: f64,
    /// Which of the four second-rank regimes applied (1: none, 2: summable,
    /// 3: boundary, 4: long-memory second order).
    pub regime: u8,
}

/// Optimal mean squared error and its rate `n^exponent (ln n)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseOrder {
    pub exponent: f64,
    pub log_power: f64,
    pub mse: f64,
    pub constant: f64,
}

/// Every constant needed for the bias/variance expansions of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub alpha: f64,
    pub rank: usize,
    pub second_rank: Rank,
    pub pair_rank: Rank,
    pub kind: BlockKind,
    pub c0: f64,
    pub v_inf: f64,
    /// Limit variance at the second rank when `alpha m2 < 1`.
    pub v_inf_second: Option<f64>,
    pub bias: BiasConstants,
    pub variance: VarianceConstants,
}

/// Serializable summary of the theory at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n: usize,
    pub theory: Theory,
    pub euler_constant: f64,
    pub optimal: OptimalBlock,
    pub mse_order: MseOrder,
    pub bias_at_optimum: f64,
    pub variance_at_optimum: f64,
}

impl Theory {
    pub fn new(model: &CovarianceModel, spec: &HermiteSpec, kind: BlockKind) -> Result<Self> {
        let alpha = model.alpha();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("memory exponent {alpha} not in (0, 1)")));
        }
        let bias = bias_constants(model, spec)?;
        let variance = variance_constants(model, spec, kind)?;
        let m = spec.rank;
        let v_inf_second = match spec.second_rank {
            Rank::Finite(m2) if alpha * (m2 as f64) < 1.0 - BOUNDARY_TOL => {
                Some(limit_variance_order(model, spec.weight(m2), m2))
            }
            _ => None,
        };
        Ok(Self {
            alpha,
            rank: m,
            second_rank: spec.second_rank,
            pair_rank: spec.pair_rank,
            kind,
            c0: model.scale(),
            v_inf: limit_variance_order(model, spec.weight(m), m),
            v_inf_second,
            bias,
            variance,
        })
    }

    fn alpha_m(&self) -> f64 {
        self.alpha * self.rank as f64
    }

    fn check(&self, n: usize, ell: f64) -> Result<()> {
        if !(ell >= 1.0 && ell < n as f64) {
            return Err(Error::Parameter(format!(
                "block length {ell} must satisfy 1 <= l < n = {n}"
            )));
        }
        Ok(())
    }

    /// Leading-order bias at sample size `n` and block length `ell`.
    pub fn bias(&self, n: usize, ell: f64) -> Result<f64> {
        self.check(n, ell)?;
        let am = self.alpha_m();
        let nf = n as f64;
        let mut b = self.bias.b0 * ell.powf(am - 1.0) - self.v_inf * (ell / nf).powf(am);
        if let (Rank::Finite(m2), Some(b1)) = (self.second_rank, self.bias.b1) {
            let am2 = self.alpha * m2 as f64;
            let mut t = b1 * ell.powf(am - am2.min(1.0));
            if on_boundary(am2, 1.0) {
                t *= ell.ln();
            }
            b += t;
        }
        Ok(b)
    }

    /// Leading-order variance at sample size `n` and block length `ell`.
    pub fn variance(&self, n: usize, ell: f64) -> Result<f64> {
        self.check(n, ell)?;
        let a = self.alpha;
        let nf = n as f64;
        let r = ell / nf;
        let mut v = if self.rank >= 2 {
            self.variance.leading * r.powf(2.0 * a)
        } else {
            let mut t = self.variance.leading * r.powf((2.0 * a).min(1.0));
            if on_boundary(a, 0.5) {
                t *= nf.ln();
            }
            t
        };
        if let (Rank::Finite(mp), Some(lambda)) = (self.pair_rank, self.variance.lambda) {
            let amp = a * mp as f64;
            let mut inner = ell.powf(self.alpha_m() - amp.min(1.0));
            if on_boundary(amp, 1.0) {
                inner *= ell.ln();
            }
            v += lambda / nf.powf(a) * inner * inner;
        }
        Ok(v)
    }

    /// `bias^2 + variance`.
    pub fn mse(&self, n: usize, ell: f64) -> Result<f64> {
        let b = self.bias(n, ell)?;
        Ok(b * b + self.variance(n, ell)?)
    }

    fn regime(&self) -> u8 {
        match self.second_rank {
            Rank::Infinite => 1,
            Rank::Finite(m2) => {
                let am2 = self.alpha * m2 as f64;
                if on_boundary(am2, 1.0) {
                    3
                } else if am2 > 1.0 {
                    2
                } else {
                    4
                }
            }
        }
    }

    /// Growth exponent and log power of the optimal block length.
    pub fn optimal_rate(&self) -> (f64, f64) {
        let a = self.alpha;
        let m = self.rank as f64;
        let boundary2 = self.regime() == 3;
        let second = match self.second_rank {
            Rank::Finite(m2) => (a * m2 as f64).min(1.0),
            Rank::Infinite => 1.0,
        };
        if self.rank == 1 && on_boundary(a, 0.5) {
            (0.5, -0.5 + if boundary2 { 1.0 } else { 0.0 })
        } else if self.rank == 1 && a > 0.5 {
            (1.0 / (3.0 - 2.0 * a), 0.0)
        } else {
            (
                a / (a * (1.0 - m) + second),
                if boundary2 { 1.0 } else { 0.0 },
            )
        }
    }

    /// Closed-form leading-order optimal block length at sample size `n`.
    pub fn optimal_block(&self, n: usize) -> Result<OptimalBlock> {
        if n < 2 {
            return Err(Error::Parameter("n must be at least 2".into()));
        }
        let a = self.alpha;
        let am = self.alpha_m();
        let e = self.v_inf * self.v_inf;
        let f = self.variance.leading;
        let regime = self.regime();
        let b0 = self.bias.b0;
        let b1 = self.bias.b1.unwrap_or(0.0);
        // Signed bias coefficient playing the role of the square root of the
        // squared constant in each regime.
        let root = match regime {
            1 => b0,
            2 => b0 + b1,
            3 => b1,
            _ => self.v_inf_second.unwrap_or(b1),
        };
        if root.abs() <= 1e-9 * self.v_inf + 10.0 * self.bias.bound {
            return Err(domain(
                "leading bias coefficient vanishes; the optimal block is not determined at leading order",
            ));
        }
        let x = root * root;
        let constant = if regime == 4 {
            let m2 = self.second_rank.finite().unwrap_or(0) as f64;
            if self.rank == 1 {
                let m2m2 = m2 - 2.0;
                let w = root
                    * (-m2m2 * e.sqrt() + (m2m2 * m2m2 * e + 4.0 * (m2 - 1.0) * (e + f)).sqrt())
                    / (2.0 * (e + f));
                w.powf(1.0 / (a * m2))
            } else {
                let m = self.rank as f64;
                (x * (m2 - m) / f).powf(1.0 / (2.0 * a * (1.0 + m2 - m)))
            }
        } else if self.rank == 1 {
            if on_boundary(a, 0.5) {
                (x / f).sqrt()
            } else if a < 0.5 {
                let se = e.sqrt();
                (-(1.0 - 2.0 * a) * root * se
                    + ((1.0 - 2.0 * a).powi(2) * x * e + 4.0 * a * (1.0 - a) * x * (e + f)).sqrt())
                    / (2.0 * a * (e + f))
            } else {
                (2.0 * x * (1.0 - a) / f).powf(1.0 / (3.0 - 2.0 * a))
            }
        } else {
            (x * (1.0 - am) / (f * a)).powf(1.0 / (2.0 * (1.0 + a - am)))
        };
        let (exponent, log_power) = self.optimal_rate();
        let nf = n as f64;
        Ok(OptimalBlock {
            ell: constant * nf.powf(exponent) * nf.ln().powf(log_power),
            constant,
            exponent,
            log_power,
            regime,
        })
    }

    /// Rate of the optimal MSE, with the constant taken from the expansion
    /// evaluated at the closed-form optimal block.
    pub fn optimal_mse_order(&self, n: usize) -> Result<MseOrder> {
        let a = self.alpha;
        let m = self.rank as f64;
        let boundary2 = if self.regime() == 3 { 1.0 } else { 0.0 };
        let second = match self.second_rank {
            Rank::Finite(m2) => (a * m2 as f64).min(1.0),
            Rank::Infinite => 1.0,
        };
        let (exponent, log_power) = if self.rank == 1 && on_boundary(a, 0.5) {
            (-0.5, 0.5 + boundary2)
        } else if self.rank == 1 && a > 0.5 {
            (-2.0 * (1.0 - a) / (3.0 - 2.0 * a), 0.0)
        } else {
            (
                -2.0 * a * (second - a * m) / (a * (1.0 - m) + second),
                2.0 * a * boundary2,
            )
        };
        let opt = self.optimal_block(n)?;
        let ell = opt.ell.clamp(1.0, n as f64 - 1.0);
        let mse = self.mse(n, ell)?;
        let nf = n as f64;
        Ok(MseOrder {
            exponent,
            log_power,
            mse,
            constant: mse / (nf.powf(exponent) * nf.ln().powf(log_power)),
        })
    }

    /// Full report at sample size `n`.
    pub fn report(&self, n: usize) -> Result<TheoryReport> {
        let optimal = self.optimal_block(n)?;
        let ell = optimal.ell.clamp(1.0, n as f64 - 1.0);
        Ok(TheoryReport {
            n,
            theory: self.clone(),
            euler_constant: zeta(self.alpha_m()),
            optimal,
            mse_order: self.optimal_mse_order(n)?,
            bias_at_optimum: self.bias(n, ell)?,
            variance_at_optimum: self.variance(n, ell)?,
        })
    }
}

impl TheoryReport {
    /// Flat `(key, value)` view for tabular output.
    pub fn fields(&self) -> Vec<(&'static str, String)> {
        let t = &self.theory;
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        vec![
            ("n", self.n.to_string()),
            ("alpha", t.alpha.to_string()),
            ("rank", t.rank.to_string()),
            ("second_rank", t.second_rank.to_string()),
            ("pair_rank", t.pair_rank.to_string()),
            ("scheme", t.kind.to_string()),
            ("c0", t.c0.to_string()),
            ("v_inf", t.v_inf.to_string()),
            ("v_inf_second", opt(t.v_inf_second)),
            ("b0", t.bias.b0.to_string()),
            ("b1", opt(t.bias.b1)),
            ("bias_bound", t.bias.bound.to_string()),
            ("variance_leading", t.variance.leading.to_string()),
            ("lambda", opt(t.variance.lambda)),
            ("euler_constant", self.euler_constant.to_string()),
            ("ell_opt", self.optimal.ell.to_string()),
            ("ell_constant", self.optimal.constant.to_string()),
            ("ell_exponent", self.optimal.exponent.to_string()),
            ("ell_log_power", self.optimal.log_power.to_string()),
            ("regime", self.optimal.regime.to_string()),
            ("mse_opt", self.mse_order.mse.to_string()),
            ("mse_exponent", self.mse_order.exponent.to_string()),
            ("mse_log_power", self.mse_order.log_power.to_string()),
            ("bias_at_opt", self.bias_at_optimum.to_string()),
            ("variance_at_opt", self.variance_at_optimum.to_string()),
        ]
    }
}

/// Leading-order bias; see [`Theory::bias`].
pub fn bias_expansion(theory: &Theory, n: usize, ell: f64) -> Result<f64> {
    theory.bias(n, ell)
}

/// Leading-order variance; see [`Theory::variance`].
pub fn variance_expansion(theory: &Theory, n: usize, ell: f64) -> Result<f64> {
    theory.variance(n, ell)
}

/// Leading-order mean squared error.
pub fn mse_theoretical(theory: &Theory, n: usize, ell: f64) -> Result<f64> {
    theory.mse(n, ell)
}

/// Minimiser of the expansion MSE over real `ell` in `[2, n/2]`, by golden
/// section on `ln ell` after a coarse scan.
pub fn numeric_optimal_block(theory: &Theory, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(parameter(format!("n = {n} too small for a block search")));
    }
    let lo = 2.0_f64.ln();
    let hi = (n as f64 / 2.0).ln();
    let f = |t: f64| theory.mse(n, t.exp()).unwrap_or(f64::INFINITY);
    let steps = 400;
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let t = lo + (hi - lo) * i as f64 / steps as f64;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (t, _) = crate::numerics::optimize::golden_section(
        f,
        (best.0 - h).max(lo),
        (best.0 + h).min(hi),
        1e-12,
    );
    Ok(t.exp())
}
