//! Leave-one-out kernel estimators and the integral functionals `Ĝ_n`
//! and `Δ̂_n`.
//!
//! Conventions used throughout:
//! - `kmat[i][j] = K((X_i - X_j)/a)` unscaled, with a zero diagonal, so
//!   every leave-one-out sum is a plain row sum.
//! - `s = 1 / ((n - 1) a^q)` is the common density normalisation; with
//!   per-coordinate bandwidths `a^q` is the product of the X bandwidths.
//! - `Ĝ_n` and `Δ̂_n` are exact: the orthant integral of `f̂_W` reduces to
//!   kernel CDFs and the integral of `f̂_W²` to kernel self-convolutions.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{kernel_cdf, kernel_selfconv, product_kernel_h, BandwidthPlan, KernelSpec};
use crate::matrix::{exact_sum, Mask, Matrix};
use crate::projection::projection_matrix;

/// A sample `{(Y_i, X_i, Z_i)}`: `x` holds the covariates kept under the null
/// (n×q), `z` the covariates under test (n×p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
    z: Matrix,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: Matrix, z: Matrix) -> Result<Self> {
        let n = y.len();
        if n < 3 {
            return Err(Error::SampleTooSmall(n));
        }
        if x.rows() != n || z.rows() != n {
            return Err(Error::Dimension(format!(
                "y has {n} rows, x has {}, z has {}",
                x.rows(),
                z.rows()
            )));
        }
        if x.cols() == 0 || z.cols() == 0 {
            return Err(Error::Dimension("x and z need at least one column each".into()));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                column: "y".into(),
                row,
            });
        }
        for (name, m) in [("x", &x), ("z", &z)] {
            for i in 0..n {
                if let Some(c) = m.row(i).iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        column: format!("{name}[{c}]"),
                        row: i,
                    });
                }
            }
        }
        Ok(Self { y, x, z })
    }

    /// Convenience constructor for one-dimensional X and Z.
    pub fn from_columns(y: Vec<f64>, x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let nx = x.len();
        let nz = z.len();
        Self::new(y, Matrix::from_vec(nx, 1, x), Matrix::from_vec(nz, 1, z))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn q(&self) -> usize {
        self.x.cols()
    }
    pub fn p(&self) -> usize {
        self.z.cols()
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn x(&self) -> &Matrix {
        &self.x
    }
    pub fn z(&self) -> &Matrix {
        &self.z
    }

    /// Reorders the observations: row `k` of the result is row `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |m: &Matrix| {
            let rows: Vec<&[f64]> = perm.iter().map(|&k| m.row(k)).collect();
            Matrix::from_rows(&rows)
        };
        Self {
            y: perm.iter().map(|&k| self.y[k]).collect(),
            x: pick(&self.x),
            z: pick(&self.z),
        }
    }

    pub fn x_columns(&self) -> Vec<Vec<f64>> {
        (0..self.q()).map(|c| self.x.column(c)).collect()
    }

    pub fn z_columns(&self) -> Vec<Vec<f64>> {
        (0..self.p()).map(|c| self.z.column(c)).collect()
    }
}

/// Numerical floors for the two random denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    pub fx_floor: f64,
    pub delta_floor: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            fx_floor: 1e-12,
            delta_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Rows whose `Δ̂_n(X_i)` fell below the floor; their projection
    /// correction was dropped.
    pub delta_floor_hits: usize,
    /// Rows whose `f̂_X(X_i)` fell below the floor in the conditional CDF
    /// estimate; they fell back to the unconditional empirical CDF.
    pub fx_floor_hits: usize,
}

impl std::ops::AddAssign for Diagnostics {
    fn add_assign(&mut self, o: Self) {
        self.delta_floor_hits += o.delta_floor_hits;
        self.fx_floor_hits += o.fx_floor_hits;
    }
}

/// Every sample quantity the statistics and the bootstrap need, computed
/// once per dataset.
#[derive(Debug, Clone)]
pub struct PrecomputedCore {
    pub spec: KernelSpec,
    pub plan: BandwidthPlan,
    pub guards: Guards,
    /// Response copy, needed by the conditional-independence residuals.
    pub y: Vec<f64>,
    /// Z copy, needed to evaluate `f̂_W(X_i, ·)` off the sample.
    pub z: Matrix,
    pub x_bandwidths: Vec<f64>,
    pub z_bandwidths: Vec<f64>,
    pub kmat: Matrix,
    pub fx: Vec<f64>,
    /// Density-weighted residuals `ε̂_i f̂_X(X_i)`.
    pub u: Vec<f64>,
    pub fw: Vec<f64>,
    pub delta: Vec<f64>,
    /// `gmat[i][j] = Ĝ_n(Z_j; X_i)`.
    pub gmat: Matrix,
    /// `indx[i][j] = 1(X_i ≤ X_j)`.
    pub indx: Mask,
    /// `zind[i][j] = 1(Z_i ≤ Z_j)`.
    pub zind: Mask,
    /// `projmat[i][j] = P̂_n 1_{Z_j}(Z_i)`.
    pub projmat: Matrix,
    /// `zcond[i][j] = F̂_{Z|X}(Z_j | X_i)`, used by the unprojected bootstrap.
    pub zcond: Matrix,
    pub diagnostics: Diagnostics,
}

impl PrecomputedCore {
    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn p(&self) -> usize {
        self.z.cols()
    }
    pub fn q(&self) -> usize {
        self.x_bandwidths.len()
    }
    pub fn x_volume(&self) -> f64 {
        self.x_bandwidths.iter().product()
    }
    pub fn z_volume(&self) -> f64 {
        self.z_bandwidths.iter().product()
    }
    /// `1 / ((n - 1) a^q)`.
    pub fn density_scale(&self) -> f64 {
        1.0 / ((self.n() as f64 - 1.0) * self.x_volume())
    }

    /// `f̂_W(X_i, z)` at an arbitrary point `z`.
    pub fn fw_at(&self, i: usize, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut diff = vec![0.0; z.len()];
        for (k, &w) in self.kmat.row(i).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (d, (a, b)) in diff.iter_mut().zip(z.iter().zip(self.z.row(k))) {
                *d = a - b;
            }
            acc += w * product_kernel_h(&diff, &self.z_bandwidths, self.spec);
        }
        acc * self.density_scale() / self.z_volume()
    }

    /// `Ĝ_n(z; X_i)` at an arbitrary point `z`.
    pub fn g_at(&self, i: usize, z: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, &w) in self.kmat.row(i).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mut h = 1.0;
            for (m, (&zm, &zk)) in z.iter().zip(self.z.row(k)).enumerate() {
                h *= kernel_cdf((zm - zk) / self.z_bandwidths[m], self.spec);
            }
            acc += w * h;
        }
        acc * self.density_scale()
    }
}

thread_local! {
    static COUNTERS: Cell<CallCounts> = const { Cell::new(CallCounts::ZERO) };
}

/// Per-thread invocation counts of the expensive builders, so tests can
/// assert the bootstrap loop never rebuilds them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CallCounts {
    pub kernel_matrix: usize,
    pub g_hat: usize,
    pub delta_hat: usize,
    pub projection: usize,
}

impl CallCounts {
    const ZERO: Self = Self {
        kernel_matrix: 0,
        g_hat: 0,
        delta_hat: 0,
        projection: 0,
    };
}

/// Counts recorded on the current thread so far.
pub fn call_counts() -> CallCounts {
    COUNTERS.with(|c| c.get())
}

pub(crate) fn bump(f: impl FnOnce(&mut CallCounts)) {
    COUNTERS.with(|c| {
        let mut v = c.get();
        f(&mut v);
        c.set(v);
    });
}

/// Symmetric matrix of unscaled product-kernel weights over X differences,
/// diagonal zero.
pub fn pairwise_kernel_matrix(data: &Dataset, plan: &BandwidthPlan, spec: KernelSpec) -> Matrix {
    bump(|c| c.kernel_matrix += 1);
    let n = data.n();
    let h = plan.x_bandwidths(data.q());
    let x = data.x();
    Matrix::par_from_fn(n, n, |i, row| {
        let xi = x.row(i);
        let mut diff = vec![0.0; xi.len()];
        for (j, out) in row.iter_mut().enumerate() {
            if j == i {
                continue;
            }
            for (d, (a, b)) in diff.iter_mut().zip(xi.iter().zip(x.row(j))) {
                *d = a - b;
            }
            *out = product_kernel_h(&diff, &h, spec);
        }
    })
}

/// `f̂_X(X_i) = (1/((n-1) a^q)) Σ_{j≠i} kmat[i][j]`; `x_volume` is `a^q`.
pub fn density_x(kmat: &Matrix, x_volume: f64) -> Vec<f64> {
    let n = kmat.rows();
    let s = 1.0 / ((n as f64 - 1.0) * x_volume);
    (0..n)
        .map(|i| {
            let mut terms: Vec<f64> = kmat.row(i).iter().copied().filter(|&k| k != 0.0).collect();
            exact_sum(&mut terms) * s
        })
        .collect()
}

/// `u_i = (1/((n-1) a^q)) Σ_{j≠i} kmat[i][j] (Y_i - Y_j) = ε̂_i f̂_X(X_i)`.
pub fn density_weighted_residuals(kmat: &Matrix, y: &[f64], x_volume: f64) -> Vec<f64> {
    let n = kmat.rows();
    let s = 1.0 / ((n as f64 - 1.0) * x_volume);
    (0..n)
        .map(|i| {
            let mut terms: Vec<f64> = kmat
                .row(i)
                .iter()
                .zip(y)
                .filter(|(&k, _)| k != 0.0)
                .map(|(&k, &yj)| k * (y[i] - yj))
                .collect();
            exact_sum(&mut terms) * s
        })
        .collect()
}

/// `f̂_W(W_i) = (1/((n-1) a^q b^p)) Σ_{j≠i} kmat[i][j] L((Z_i - Z_j)/b)`.
pub fn density_w(data: &Dataset, kmat: &Matrix, plan: &BandwidthPlan, spec: KernelSpec) -> Vec<f64> {
    let n = data.n();
    let hx = plan.x_bandwidths(data.q());
    let hz = plan.z_bandwidths(data.p());
    let s = 1.0 / ((n as f64 - 1.0) * hx.iter().product::<f64>() * hz.iter().product::<f64>());
    let z = data.z();
    let mut diff = vec![0.0; data.p()];
    let mut terms = Vec::new();
    (0..n)
        .map(|i| {
            let zi = z.row(i);
            terms.clear();
            for (j, &w) in kmat.row(i).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (d, (a, b)) in diff.iter_mut().zip(zi.iter().zip(z.row(j))) {
                    *d = a - b;
                }
                terms.push(w * product_kernel_h(&diff, &hz, spec));
            }
            exact_sum(&mut terms) * s
        })
        .collect()
}

/// `gmat[i][j] = Ĝ_n(Z_j; X_i) = (1/((n-1) a^q)) Σ_{k≠i} kmat[i][k] Π_m Λ((Z_j - Z_k)/b)`
/// with `Λ` the kernel CDF.
pub fn g_hat(data: &Dataset, kmat: &Matrix, plan: &BandwidthPlan, spec: KernelSpec) -> Matrix {
    g_hat_at(data, kmat, plan, spec, data.z())
}

/// [`g_hat`] evaluated at arbitrary points: `out[i][j] = Ĝ_n(points_j; X_i)`.
pub fn g_hat_at(
    data: &Dataset,
    kmat: &Matrix,
    plan: &BandwidthPlan,
    spec: KernelSpec,
    points: &Matrix,
) -> Matrix {
    bump(|c| c.g_hat += 1);
    let n = data.n();
    let hx = plan.x_bandwidths(data.q());
    let hz = plan.z_bandwidths(data.p());
    let s = 1.0 / ((n as f64 - 1.0) * hx.iter().product::<f64>());
    let z = data.z();
    // cdfs[k][j] = Π_m Λ((points_j - Z_k)/b)
    let cdfs = Matrix::par_from_fn(n, points.rows(), |k, row| {
        let zk = z.row(k);
        for (j, out) in row.iter_mut().enumerate() {
            let mut h = 1.0;
            for (m, (&pj, &zkm)) in points.row(j).iter().zip(zk).enumerate() {
                h *= kernel_cdf((pj - zkm) / hz[m], spec);
                if h == 0.0 {
                    break;
                }
            }
            *out = h;
        }
    });
    let mut g = kmat.sparse_left_mul(&cdfs);
    for i in 0..n {
        for v in g.row_mut(i) {
            *v *= s;
        }
    }
    g
}

/// `Δ̂_n(X_i) = ∫ f̂_W(X_i, z)² dz`
/// `= s² b^{-p} Σ_j Σ_k kmat[i][j] kmat[i][k] Π_m (k⋆k)((Z_j - Z_k)/b)`,
/// evaluated as the quadratic form `k_iᵀ C k_i`.
pub fn delta_hat(data: &Dataset, kmat: &Matrix, plan: &BandwidthPlan, spec: KernelSpec) -> Vec<f64> {
    bump(|c| c.delta_hat += 1);
    let n = data.n();
    let hx = plan.x_bandwidths(data.q());
    let hz = plan.z_bandwidths(data.p());
    let s = 1.0 / ((n as f64 - 1.0) * hx.iter().product::<f64>());
    let scale = s * s / hz.iter().product::<f64>();
    let z = data.z();
    let conv = Matrix::par_from_fn(n, n, |j, row| {
        let zj = z.row(j);
        for (k, out) in row.iter_mut().enumerate() {
            let mut h = 1.0;
            for (m, (&a, &b)) in zj.iter().zip(z.row(k)).enumerate() {
                h *= kernel_selfconv((a - b) / hz[m], spec);
                if h == 0.0 {
                    break;
                }
            }
            *out = h;
        }
    });
    let kc = kmat.sparse_left_mul(&conv);
    (0..n)
        .map(|i| {
            let mut terms: Vec<f64> = kmat
                .row(i)
                .iter()
                .zip(kc.row(i))
                .filter(|(&a, _)| a != 0.0)
                .map(|(&a, &b)| a * b)
                .collect();
            exact_sum(&mut terms) * scale
        })
        .collect()
}

/// Leave-one-out conditional CDF `F̂(v_j | X_i)` of the rows of `values`
/// given X, evaluated at every sample row:
/// `out[i][j] = (1/(f̂_X(X_i)(n-1)a^q)) Σ_{k≠i} kmat[i][k] 1(v_k ≤ v_j)`.
///
/// Rows with `f̂_X(X_i) < floor` use the unconditional empirical CDF over
/// `k ≠ i` instead; the number of such rows is returned alongside.
pub fn cond_cdf_given_x(
    kmat: &Matrix,
    values: &Matrix,
    fx: &[f64],
    floor: f64,
    x_volume: f64,
) -> (Matrix, usize) {
    let n = kmat.rows();
    let ind = Mask::orthant(values);
    let s = 1.0 / ((n as f64 - 1.0) * x_volume);
    let out = Matrix::par_from_fn(n, n, |i, row| {
        if fx[i] < floor {
            for k in (0..n).filter(|&k| k != i) {
                for (o, &hit) in row.iter_mut().zip(ind.row(k)) {
                    if hit {
                        *o += 1.0;
                    }
                }
            }
            let inv = 1.0 / (n as f64 - 1.0);
            row.iter_mut().for_each(|o| *o *= inv);
        } else {
            let nz: Vec<(usize, f64)> = kmat
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(k, &w)| (k, w))
                .collect();
            let inv = s / fx[i];
            let mut terms = Vec::with_capacity(nz.len());
            for (j, o) in row.iter_mut().enumerate() {
                terms.clear();
                terms.extend(nz.iter().filter(|&&(k, _)| ind.get(k, j)).map(|&(_, w)| w));
                *o = exact_sum(&mut terms) * inv;
            }
        }
    });
    let hits = fx.iter().filter(|&&f| f < floor).count();
    (out, hits)
}

/// Assembles every [`PrecomputedCore`] field.
pub fn build_core(
    data: &Dataset,
    plan: &BandwidthPlan,
    spec: KernelSpec,
    guards: Guards,
) -> PrecomputedCore {
    let x_bandwidths = plan.x_bandwidths(data.q());
    let z_bandwidths = plan.z_bandwidths(data.p());
    let x_volume: f64 = x_bandwidths.iter().product();

    let kmat = pairwise_kernel_matrix(data, plan, spec);
    let fx = density_x(&kmat, x_volume);
    let u = density_weighted_residuals(&kmat, data.y(), x_volume);
    let fw = density_w(data, &kmat, plan, spec);
    let delta = delta_hat(data, &kmat, plan, spec);
    let gmat = g_hat(data, &kmat, plan, spec);
    let indx = Mask::orthant(data.x());
    let zind = Mask::orthant(data.z());
    let (projmat, delta_floor_hits) = projection_matrix(&gmat, &fw, &delta, &zind, guards.delta_floor);
    let (zcond, fx_floor_hits) = cond_cdf_given_x(&kmat, data.z(), &fx, guards.fx_floor, x_volume);

    PrecomputedCore {
        spec,
        plan: plan.clone(),
        guards,
        y: data.y().to_vec(),
        z: data.z().clone(),
        x_bandwidths,
        z_bandwidths,
        kmat,
        fx,
        u,
        fw,
        delta,
        gmat,
        indx,
        zind,
        projmat,
        zcond,
        diagnostics: Diagnostics {
            delta_floor_hits,
            fx_floor_hits,
        },
    }
}
