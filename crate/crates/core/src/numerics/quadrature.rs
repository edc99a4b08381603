//! Adaptive Gauss–Kronrod integration and Gauss–Hermite rules.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

pub const MAX_GAUSS_HERMITE: usize = 180;

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn kronrod_panel<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel
where
    F: FnMut(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut gk = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, buf);
    for d in 0..dim {
        gk[d] += WGK[7] * buf[d];
        g[d] += WG[3] * buf[d];
    }
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = h * x;
        for &t in &[c - dx, c + dx] {
            f(t, buf);
            for d in 0..dim {
                gk[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut error: f64 = 0.0;
    for d in 0..dim {
        gk[d] *= h;
        g[d] *= h;
        error = error.max((gk[d] - g[d]).abs());
    }
    Panel {
        a,
        b,
        value: gk,
        error,
    }
}

/// Result of an adaptive integration: per-component values and a global error bound.
#[derive(Debug, Clone)]
pub struct Integral {
    pub values: Vec<f64>,
    pub error: f64,
}

/// Integrates a vector-valued function over the given consecutive intervals.
///
/// `points` must be sorted; each consecutive pair is one starting panel, so known
/// discontinuities should be listed there. Bisection continues on the worst panel
/// until the summed error estimate is below `abs_tol + rel_tol * max|value|`.
pub fn integrate_vec<F>(
    mut f: F,
    dim: usize,
    points: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral>
where
    F: FnMut(f64, &mut [f64]),
{
    if points.len() < 2 {
        return Err(Error::Parameter("need at least two integration points".into()));
    }
    let mut buf = vec![0.0; dim];
    let mut panels: Vec<Panel> = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            panels.push(kronrod_panel(&mut f, w[0], w[1], dim, &mut buf));
        }
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for p in &panels {
            for d in 0..dim {
                total[d] += p.value[d];
            }
            err += p.error;
        }
        if total.iter().chain(std::iter::once(&err)).any(|v| !v.is_finite()) {
            return Err(Error::Accuracy("non-finite integrand".into()));
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if err <= abs_tol + rel_tol * scale {
            return Ok(Integral {
                values: total,
                error: err,
            });
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature stopped at error {err:e}"
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Accuracy(format!(
                "adaptive quadrature stalled at error {err:e}"
            )));
        }
        panels.push(kronrod_panel(&mut f, p.a, mid, dim, &mut buf));
        panels.push(kronrod_panel(&mut f, mid, p.b, dim, &mut buf));
    }
}

/// Scalar adaptive Gauss–Kronrod integration over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let out = integrate_vec(|x, o: &mut [f64]| o[0] = f(x), 1, &[a, b], abs_tol, rel_tol)?;
    Ok((out.values[0], out.error))
}

/// Gauss–Hermite rule for the standard normal law: `E[f(Z)] ≈ Σ w_i f(x_i)`.
///
/// Nodes come from Newton iteration on the orthonormal recurrence; weights sum to one.
/// The recurrence underflows beyond 180 nodes, which is the supported maximum.
pub fn gauss_hermite_normal(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!((1..=MAX_GAUSS_HERMITE).contains(&n));
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let weights: Vec<f64> = w.iter().map(|v| v / sqrt_pi).collect();
    (nodes, weights)
}
