//! Marginal law of `G(Z)` for standard normal `Z`, by level-set root finding
//! and quadrature.

use crate::error::{parameter, Result};
use crate::hermite::{hermite_coefficients_piecewise, HermiteSpec};
use crate::lrd_sim::Transform;
use crate::numerics::optimize::bisect;
use crate::numerics::quadrature::integrate;
use crate::numerics::special::{normal_cdf, normal_pdf};

const HALF_WIDTH: f64 = 12.0;
const GRID_POINTS: usize = 24_001;
const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MarginalLaw {
    transform: Transform,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl MarginalLaw {
    pub fn new(transform: Transform) -> Self {
        let step = 2.0 * HALF_WIDTH / (GRID_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..GRID_POINTS).map(|i| -HALF_WIDTH + i as f64 * step).collect();
        let values = grid.iter().map(|&z| transform.apply(z)).collect();
        Self {
            transform,
            grid,
            values,
        }
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    /// Sorted solutions of `G(z) = y` in `[-12, 12]`.
    pub fn level_set(&self, y: f64) -> Vec<f64> {
        let g = self.transform;
        let mut roots = Vec::new();
        for i in 0..GRID_POINTS - 1 {
            let (a, b) = (self.values[i] - y, self.values[i + 1] - y);
            if a == 0.0 {
                roots.push(self.grid[i]);
            } else if a * b < 0.0 {
                if let Ok(r) = bisect(|z| g.apply(z) - y, self.grid[i], self.grid[i + 1], 1e-14) {
                    roots.push(r);
                }
            }
        }
        if self.values[GRID_POINTS - 1] == y {
            roots.push(self.grid[GRID_POINTS - 1]);
        }
        roots
    }

    // Segment end points splitting `[-12, 12]` at every solution of `G = y` for each `y`.
    fn segments(&self, levels: &[f64]) -> Vec<f64> {
        let mut pts = vec![-HALF_WIDTH, HALF_WIDTH];
        for &y in levels {
            pts.extend(self.level_set(y));
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }

    /// `P(G(Z) <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        let pts = self.segments(&[y]);
        let g = self.transform;
        let mut p = 0.0;
        if g.apply(-HALF_WIDTH) <= y {
            p += normal_cdf(-HALF_WIDTH);
        }
        if g.apply(HALF_WIDTH) <= y {
            p += normal_cdf(-HALF_WIDTH);
        }
        for w in pts.windows(2) {
            if g.apply(0.5 * (w[0] + w[1])) <= y {
                p += normal_cdf(w[1]) - normal_cdf(w[0]);
            }
        }
        p.clamp(0.0, 1.0)
    }

    /// Smallest `y` with `P(G(Z) <= y) >= p`, to about `1e-12`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(parameter(format!("probability {p} not in (0, 1)")));
        }
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 1e-9 * (1.0 + hi - lo);
        bisect(|y| self.cdf(y) - p, lo - pad, hi + pad, 1e-12 * (1.0 + hi - lo))
    }

    fn integrate_over(&self, pts: &[f64], keep: impl Fn(f64) -> bool) -> Result<f64> {
        let g = self.transform;
        let mut total = 0.0;
        for w in pts.windows(2) {
            if w[1] - w[0] <= 0.0 || !keep(g.apply(0.5 * (w[0] + w[1]))) {
                continue;
            }
            let (v, _) = integrate(|z| g.apply(z) * normal_pdf(z), w[0], w[1], QUAD_TOL, QUAD_TOL)?;
            total += v;
        }
        Ok(total)
    }

    /// `E G(Z)`.
    pub fn mean(&self) -> Result<f64> {
        let pts = [-HALF_WIDTH, -6.0, -3.0, 0.0, 3.0, 6.0, HALF_WIDTH];
        self.integrate_over(&pts, |_| true)
    }

    /// Trimmed mean `E[Y 1{q_lower < Y < q_upper}] / (upper - lower)` of `Y = G(Z)`.
    pub fn trimmed_mean(&self, lower: f64, upper: f64) -> Result<f64> {
        let (q1, q2) = (self.quantile(lower)?, self.quantile(upper)?);
        let mut pts = self.segments(&[q1, q2]);
        pts.extend([-6.0, -3.0, 0.0, 3.0, 6.0]);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        Ok(self.integrate_over(&pts, |v| v > q1 && v < q2)? / (upper - lower))
    }

    /// Hermite expansion of the exact influence function of the trimmed mean,
    /// `clamp(G(z), q_lower, q_upper) / (upper - lower)` up to a constant.
    pub fn trimmed_influence_spec(&self, lower: f64, upper: f64, kmax: usize) -> Result<HermiteSpec> {
        let (q1, q2) = (self.quantile(lower)?, self.quantile(upper)?);
        let breaks = self.segments(&[q1, q2]);
        let g = self.transform;
        let width = upper - lower;
        hermite_coefficients_piecewise(move |z| g.apply(z).clamp(q1, q2) / width, kmax, &breaks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_law_is_normal() {
        let law = MarginalLaw::new(Transform::Identity);
        assert!((law.cdf(0.7) - normal_cdf(0.7)).abs() < 1e-15);
        assert!((law.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(law.mean().unwrap().abs() < 1e-12);
    }

    #[test]
    fn chi_square_law() {
        // H2 = Z^2 - 1, so P(H2 <= y) = 2 Phi(sqrt(y + 1)) - 1.
        let law = MarginalLaw::new(Transform::Hermite(2));
        for y in [-0.5, 0.0, 1.3] {
            let exact = 2.0 * normal_cdf((y + 1.0f64).sqrt()) - 1.0;
            assert!((law.cdf(y) - exact).abs() < 1e-13);
        }
        assert_eq!(law.level_set(0.0).len(), 2);
    }

    #[test]
    fn symmetric_trimmed_mean_of_odd_law() {
        let law = MarginalLaw::new(Transform::Sin);
        assert!(law.trimmed_mean(0.2, 0.8).unwrap().abs() < 1e-9);
        let id = MarginalLaw::new(Transform::Identity);
        // Truncated normal mean: (phi(a) - phi(b)) / (Phi(b) - Phi(a)) with a = q(0.3), b = q(0.9).
        let a = id.quantile(0.3).unwrap();
        let b = id.quantile(0.9).unwrap();
        let exact = (normal_pdf(a) - normal_pdf(b)) / 0.6;
        assert!((id.trimmed_mean(0.3, 0.9).unwrap() - exact).abs() < 1e-9);
    }
}
