//! Summation of slowly decaying positive-tail series.

use crate::error::{Error, Result};

/// A truncated series together with its extrapolated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Estimated absolute error of the tail correction.
    pub bound: f64,
    pub terms: u64,
}

fn power_fit(ka: f64, fa: f64, kb: f64, fb: f64) -> Option<(f64, f64)> {
    if fa == 0.0 || fb == 0.0 || (fa > 0.0) != (fb > 0.0) {
        return None;
    }
    let p = (fa / fb).ln() / (kb / ka).ln();
    (p.is_finite() && p > 1.0).then(|| (fb * kb.powf(p), p))
}

fn tail_from(fit: (f64, f64), end: f64) -> f64 {
    let (c, p) = fit;
    // ∫_{end+1/2}^∞ c x^{-p} dx
    c * (end + 0.5).powf(1.0 - p) / (p - 1.0)
}

/// Sums `f(k)` for `k >= start`, assuming the terms eventually follow a power law
/// `c k^{-p}` with `p > 1`.
///
/// The truncation point is doubled until two power-law fits of the tail (from the
/// last and the second-to-last quarter of the summed range) agree to
/// `abs_tol + rel_tol * |sum|`; the disagreement is reported as `bound`.
pub fn sum_power_tail<F>(
    f: F,
    start: u64,
    abs_tol: f64,
    rel_tol: f64,
    max_terms: u64,
) -> Result<SeriesSum>
where
    F: Fn(u64) -> f64,
{
    let mut span: u64 = 1024;
    let mut sum = 0.0;
    let mut next = start;
    loop {
        let k_end = start + span;
        while next <= k_end {
            sum += f(next);
            next += 1;
        }
        let q1 = start + span / 2;
        let q2 = start + span / 4;
        let f_end = f(k_end);
        if f_end == 0.0 {
            return Ok(SeriesSum {
                value: sum,
                bound: 0.0,
                terms: span + 1,
            });
        }
        let (fq1, fq2) = (f(q1), f(q2));
        let fits = (
            power_fit(q1 as f64, fq1, k_end as f64, f_end),
            power_fit(q2 as f64, fq2, q1 as f64, fq1),
        );
        if let (Some(a), Some(b)) = fits {
            let ta = tail_from(a, k_end as f64);
            let tb = tail_from(b, k_end as f64);
            let bound = (ta - tb).abs();
            let total = sum + ta;
            if bound <= abs_tol + rel_tol * total.abs() {
                return Ok(SeriesSum {
                    value: total,
                    bound,
                    terms: span + 1,
                });
            }
            if span >= max_terms {
                return Err(Error::Accuracy(format!(
                    "series tail bound {bound:e} exceeds tolerance after {span} terms"
                )));
            }
        } else if span >= max_terms {
            return Err(Error::Accuracy(format!(
                "series terms do not follow a summable power law after {span} terms"
            )));
        }
        span *= 2;
    }
}
