//! Estimated orthogonal projection of the orthant indicator `1(Z_i ≤ z)` onto
//! the orthocomplement of `f̂_W(X_i, ·)`, conditionally on `X_i`:
//!
//! `P̂_n 1_z(Z_i) = 1(Z_i ≤ z) - f̂_W(W_i) Δ̂_n(X_i)⁻¹ Ĝ_n(z; X_i)`.

use crate::error::{Error, Result};
use crate::estimators::{bump, PrecomputedCore};
use crate::matrix::{Mask, Matrix};
use crate::quadrature::{integrate_1d, integrate_2d, sorted_breaks, GaussLegendre};

/// `projmat[i][j] = zind[i][j] - fw[i] gmat[i][j] / delta[i]`.
///
/// Rows with `delta[i] < delta_floor` keep the raw indicators (correction
/// dropped); their count is returned with the matrix.
pub fn projection_matrix(
    gmat: &Matrix,
    fw: &[f64],
    delta: &[f64],
    zind: &Mask,
    delta_floor: f64,
) -> (Matrix, usize) {
    bump(|c| c.projection += 1);
    let n = gmat.rows();
    let cols = gmat.cols();
    let mut hits = 0;
    let mut out = Matrix::zeros(n, cols);
    for i in 0..n {
        let degenerate = !(delta[i] >= delta_floor);
        if degenerate {
            hits += 1;
        }
        let coef = if degenerate { 0.0 } else { fw[i] / delta[i] };
        let row = out.row_mut(i);
        for (j, o) in row.iter_mut().enumerate() {
            let ind = if zind.get(i, j) { 1.0 } else { 0.0 };
            *o = if degenerate { ind } else { ind - coef * gmat.get(i, j) };
        }
    }
    (out, hits)
}

/// Quadrature settings for [`orthogonality_defect`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureBudget {
    /// Gauss–Legendre points per cell and dimension.
    pub points: usize,
    /// Largest tolerated change under one refinement.
    pub tol: f64,
}

impl Default for QuadratureBudget {
    fn default() -> Self {
        Self {
            points: 10,
            tol: 1e-9,
        }
    }
}

/// `∫ f̂_W(X_i, z̄) [1(z̄ ≤ Z_j) - f̂_W(X_i, z̄) Δ̂_n⁻¹(X_i) Ĝ_n(Z_j; X_i)] dz̄`
/// by quadrature. Algebraically this is `Ĝ - Δ̂ Δ̂⁻¹ Ĝ = 0`, so the returned
/// value measures how well the closed forms and the projection agree with
/// direct integration of the density estimate.
///
/// Supports `p ∈ {1, 2}`. Refuses rows whose `Δ̂_n(X_i)` is below the floor.
pub fn orthogonality_defect(
    core: &PrecomputedCore,
    i: usize,
    j: usize,
    budget: QuadratureBudget,
) -> Result<f64> {
    if !(core.delta[i] >= core.guards.delta_floor) {
        return Err(Error::Degenerate(i));
    }
    let p = core.p();
    let coef = core.gmat.get(i, j) / core.delta[i];
    let zj = core.z.row(j).to_vec();
    let rule = GaussLegendre::new(budget.points);

    // Breakpoints per coordinate: support edges of every contributing
    // kernel, and the indicator jump at Z_j.
    let neighbours: Vec<usize> = (0..core.n()).filter(|&k| core.kmat.get(i, k) != 0.0).collect();
    let breaks: Vec<Vec<f64>> = (0..p)
        .map(|m| {
            let b = core.z_bandwidths[m];
            let mut pts = vec![zj[m]];
            for &k in &neighbours {
                let c = core.z.get(k, m);
                pts.extend([c - b, c, c + b]);
            }
            sorted_breaks(pts)
        })
        .collect();
    if breaks.iter().any(|b| b.len() < 2) {
        return Ok(0.0);
    }

    match p {
        1 => integrate_1d(
            |t| {
                let f = core.fw_at(i, &[t]);
                let ind = if t <= zj[0] { 1.0 } else { 0.0 };
                f * (ind - f * coef)
            },
            &breaks[0],
            &rule,
            budget.tol,
        ),
        2 => integrate_2d(
            |s, t| {
                let f = core.fw_at(i, &[s, t]);
                let ind = if s <= zj[0] && t <= zj[1] { 1.0 } else { 0.0 };
                f * (ind - f * coef)
            },
            &breaks[0],
            &breaks[1],
            &rule,
            budget.tol,
        ),
        _ => Err(Error::UnsupportedDesign(format!(
            "orthogonality check supports p <= 2, got p = {p}"
        ))),
    }
}
