//! Composite Gauss–Legendre quadrature over user-supplied breakpoints.
//!
//! Every integrand in this crate is piecewise polynomial with known
//! breakpoints (kernel support edges, indicator jumps), so splitting at those
//! points and applying a fixed-order rule on each piece is exact up to
//! rounding. Refinement is still compared against the coarse estimate so a
//! missed breakpoint shows up as a convergence failure.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(points: usize) -> Self {
        assert!(points >= 1);
        let m = points;
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[lo, hi]` with a single application of the rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, deduplicated copy of `points`.
pub fn sorted_breaks(mut points: Vec<f64>) -> Vec<f64> {
    points.retain(|p| p.is_finite());
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    points.dedup();
    points
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, one rule application per
/// piece. Returns an error when halving every piece changes the estimate by
/// more than `tol` (absolute).
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rule: &GaussLegendre,
    tol: f64,
) -> Result<f64> {
    let coarse: f64 = breaks
        .windows(2)
        .map(|w| rule.integrate(&f, w[0], w[1]))
        .sum();
    let fine: f64 = breaks
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            rule.integrate(&f, w[0], mid) + rule.integrate(&f, mid, w[1])
        })
        .sum();
    let change = (fine - coarse).abs();
    if change > tol {
        return Err(Error::Quadrature {
            estimate: fine,
            change,
        });
    }
    Ok(fine)
}

/// Tensor-product version of [`integrate_1d`] over the grid of cells
/// `xbreaks × ybreaks`.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    xbreaks: &[f64],
    ybreaks: &[f64],
    rule: &GaussLegendre,
    tol: f64,
) -> Result<f64> {
    let cell = |x0: f64, x1: f64, y0: f64, y1: f64| -> f64 {
        let mut acc = 0.0;
        for (x, wx) in rule.mapped(x0, x1) {
            for (y, wy) in rule.mapped(y0, y1) {
                acc += wx * wy * f(x, y);
            }
        }
        acc
    };
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for xw in xbreaks.windows(2) {
        let xm = 0.5 * (xw[0] + xw[1]);
        for yw in ybreaks.windows(2) {
            let ym = 0.5 * (yw[0] + yw[1]);
            coarse += cell(xw[0], xw[1], yw[0], yw[1]);
            fine += cell(xw[0], xm, yw[0], ym)
                + cell(xm, xw[1], yw[0], ym)
                + cell(xw[0], xm, ym, yw[1])
                + cell(xm, xw[1], ym, yw[1]);
        }
    }
    let change = (fine - coarse).abs();
    if change > tol {
        return Err(Error::Quadrature {
            estimate: fine,
            change,
        });
    }
    Ok(fine)
}
