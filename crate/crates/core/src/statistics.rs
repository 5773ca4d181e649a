//! Empirical processes evaluated at the sample points and their
//! Cramér–von Mises / Kolmogorov–Smirnov functionals.
//!
//! Each process has the form `values[j] = (1/n) Σ_i S[i][j]` for a summand
//! matrix `S`; multiplier bootstrap replicates reweight the rows of `S`.
//! Column sums always run over `i` in ascending order.

use serde::{Deserialize, Serialize};

use crate::estimators::PrecomputedCore;
use crate::matrix::{exact_sum, Mask, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// Projected significance process `R̂_n`.
    Projected,
    /// Unprojected significance process `T̂_n`.
    Dm,
    /// Projected conditional-independence process `Î_n`.
    ProjectedCi,
    /// Unprojected conditional-independence process `L̂_n`.
    DmCi,
}

impl ProcessKind {
    pub fn is_ci(self) -> bool {
        matches!(self, Self::ProjectedCi | Self::DmCi)
    }
    pub fn is_projected(self) -> bool {
        matches!(self, Self::Projected | Self::ProjectedCi)
    }
}

/// Process values at the sample evaluation points `W_j` (or `(Y_j, W_j)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessValues {
    pub kind: ProcessKind,
    pub values: Vec<f64>,
}

/// Scaled statistics: `n·CvM_n` and `√n·KS_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatPair {
    pub cvm: f64,
    pub ks: f64,
}

impl StatPair {
    pub fn from_process(pv: &ProcessValues) -> Self {
        Self {
            cvm: cvm_stat(pv),
            ks: ks_stat(pv),
        }
    }
}

/// `n · (1/n) Σ_j values[j]² = Σ_j values[j]²`.
pub fn cvm_stat(pv: &ProcessValues) -> f64 {
    pv.values.iter().map(|v| v * v).sum()
}

/// `√n · max_j |values[j]|`.
pub fn ks_stat(pv: &ProcessValues) -> f64 {
    let n = pv.values.len() as f64;
    n.sqrt() * pv.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Row-weighted summand matrix of one process.
#[derive(Debug, Clone)]
pub struct Summands {
    kind: ProcessKind,
    terms: Matrix,
}

impl Summands {
    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn terms(&self) -> &Matrix {
        &self.terms
    }

    /// `(1/n) Σ_i w_i S[i][·]`, with `w ≡ 1` when `weights` is `None`.
    pub fn apply(&self, weights: Option<&[f64]>) -> ProcessValues {
        let n = self.terms.rows();
        let mut acc = vec![0.0; self.terms.cols()];
        for i in 0..n {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            for (a, &s) in acc.iter_mut().zip(self.terms.row(i)) {
                *a += w * s;
            }
        }
        let inv = 1.0 / n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        ProcessValues {
            kind: self.kind,
            values: acc,
        }
    }
}

/// Residual factor of the summands: `u_i` broadcast over `j`, or the
/// conditional-independence residual matrix `E[i][j]`.
enum Residual<'a> {
    Vector(&'a [f64]),
    Matrix(&'a Matrix),
}

impl Residual<'_> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Residual::Vector(u) => u[i],
            Residual::Matrix(e) => e.get(i, j),
        }
    }
}

fn weighted(resid: Residual<'_>, indx: &Mask, weight: impl Fn(usize, usize) -> f64 + Sync, n: usize) -> Matrix {
    Matrix::par_from_fn(n, n, |i, row| {
        for (j, o) in row.iter_mut().enumerate() {
            if indx.get(i, j) {
                *o = resid.at(i, j) * weight(i, j);
            }
        }
    })
}

fn indicator(m: &Mask, i: usize, j: usize) -> f64 {
    if m.get(i, j) {
        1.0
    } else {
        0.0
    }
}

/// Summands of the observed process of `kind`. Conditional-independence
/// kinds need the residual matrix from [`ci_residual_matrix`].
pub fn observed_summands(core: &PrecomputedCore, kind: ProcessKind, ci_resid: Option<&Matrix>) -> Summands {
    let n = core.n();
    let resid = residual_for(core, kind, ci_resid);
    let terms = if kind.is_projected() {
        weighted(resid, &core.indx, |i, j| core.projmat.get(i, j), n)
    } else {
        weighted(resid, &core.indx, |i, j| indicator(&core.zind, i, j), n)
    };
    Summands { kind, terms }
}

/// Summands of the multiplier bootstrap process of `kind`. Projected kinds
/// reuse the observed summands; unprojected kinds centre the Z indicator by
/// the estimated `F̂_{Z|X}`.
pub fn bootstrap_summands(core: &PrecomputedCore, kind: ProcessKind, ci_resid: Option<&Matrix>) -> Summands {
    if kind.is_projected() {
        return observed_summands(core, kind, ci_resid);
    }
    let n = core.n();
    let resid = residual_for(core, kind, ci_resid);
    let terms = weighted(
        resid,
        &core.indx,
        |i, j| indicator(&core.zind, i, j) - core.zcond.get(i, j),
        n,
    );
    Summands { kind, terms }
}

fn residual_for<'a>(core: &'a PrecomputedCore, kind: ProcessKind, ci_resid: Option<&'a Matrix>) -> Residual<'a> {
    if kind.is_ci() {
        Residual::Matrix(ci_resid.expect("conditional-independence kinds need the residual matrix"))
    } else {
        Residual::Vector(&core.u)
    }
}

/// `R̂_n(W_j) = (1/n) Σ_i u_i 1(X_i ≤ X_j) P̂_n 1_{Z_j}(Z_i)`.
pub fn projected_process(core: &PrecomputedCore) -> ProcessValues {
    observed_summands(core, ProcessKind::Projected, None).apply(None)
}

/// `T̂_n(W_j) = (1/n) Σ_i u_i 1(W_i ≤ W_j)`.
pub fn dm_process(core: &PrecomputedCore) -> ProcessValues {
    observed_summands(core, ProcessKind::Dm, None).apply(None)
}

/// `E[i][j] = ε̂_i(Y_j) f̂_X(X_i)
///          = (1/((n-1)a^q)) Σ_{k≠i} K_ik [1(Y_i ≤ Y_j) - 1(Y_k ≤ Y_j)]`.
pub fn ci_residual_matrix(core: &PrecomputedCore, y: &[f64]) -> Matrix {
    let n = core.n();
    let s = core.density_scale();
    Matrix::par_from_fn(n, n, |i, row| {
        let nz: Vec<(usize, f64)> = core
            .kmat
            .row(i)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(k, &w)| (k, w))
            .collect();
        let yi = y[i];
        let fxi = core.fx[i];
        let mut terms = Vec::with_capacity(nz.len());
        for (o, &yj) in row.iter_mut().zip(y) {
            terms.clear();
            terms.extend(nz.iter().filter(|&&(k, _)| y[k] <= yj).map(|&(_, w)| w));
            *o = -exact_sum(&mut terms) * s;
            if yi <= yj {
                *o += fxi;
            }
        }
    })
}

/// `Î_n(Y_j, W_j) = (1/n) Σ_i E[i][j] 1(X_i ≤ X_j) P̂_n 1_{Z_j}(Z_i)`.
pub fn ci_process(core: &PrecomputedCore, ci_resid: &Matrix) -> ProcessValues {
    observed_summands(core, ProcessKind::ProjectedCi, Some(ci_resid)).apply(None)
}

/// `L̂_n(Y_j, W_j) = (1/n) Σ_i E[i][j] 1(W_i ≤ W_j)`.
pub fn dm_ci_process(core: &PrecomputedCore, ci_resid: &Matrix) -> ProcessValues {
    observed_summands(core, ProcessKind::DmCi, Some(ci_resid)).apply(None)
}
