//! Independent oracles shared by the integration tests: reference kernels,
//! an 8-point Gauss–Legendre rule and brute-force sums written directly
//! from the estimator definitions.

#![allow(dead_code)]

pub mod props;

use projtest::estimators::{build_core, Dataset, Guards, PrecomputedCore};
use projtest::kernels::{bandwidth_rule, BandwidthPlan, KernelOrder, KernelSpec, ScaleMode};
use projtest::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_78,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

/// Nodes and weights of the 8-point rule mapped to `[lo, hi]`.
pub fn gl8(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut out = Vec::with_capacity(8);
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        out.push((mid - half * x, w * half));
        out.push((mid + half * x, w * half));
    }
    out
}

/// Sorted, deduplicated breakpoints inside `[lo, hi]`, endpoints included.
pub fn breaks_within(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.push(lo);
    pts.push(hi);
    pts.retain(|&t| t >= lo && t <= hi);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

/// Piecewise 8-point quadrature over consecutive breakpoints. Exact for
/// piecewise polynomials of degree ≤ 15 with kinks only at the breakpoints.
pub fn integrate(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .map(|w| gl8(w[0], w[1]).into_iter().map(|(t, wt)| wt * f(t)).sum::<f64>())
        .sum()
}

/// Tensor-product version of [`integrate`] on a rectangle grid.
pub fn integrate2(f: impl Fn(f64, f64) -> f64, b1: &[f64], b2: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w1 in b1.windows(2) {
        let n1 = gl8(w1[0], w1[1]);
        for w2 in b2.windows(2) {
            let n2 = gl8(w2[0], w2[1]);
            for &(s, ws) in &n1 {
                for &(t, wt) in &n2 {
                    acc += ws * wt * f(s, t);
                }
            }
        }
    }
    acc
}

/// Reference Epanechnikov kernels in monomial form.
pub fn kref(u: f64, order: KernelOrder) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    let u2 = u * u;
    match order {
        KernelOrder::Second => 0.75 * (1.0 - u2),
        KernelOrder::Fourth => 15.0 / 32.0 * (3.0 - 10.0 * u2 + 7.0 * u2 * u2),
    }
}

/// `∫_{-1}^{u} k` by quadrature.
pub fn cdf_ref(u: f64, order: KernelOrder) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    let hi = u.min(1.0);
    integrate(|t| kref(t, order), &breaks_within(vec![], -1.0, hi))
}

/// `∫ k(t) k(t + v) dt` by quadrature.
pub fn selfconv_ref(v: f64, order: KernelOrder) -> f64 {
    let lo = (-1.0f64).max(-1.0 - v);
    let hi = 1.0f64.min(1.0 - v);
    if hi <= lo {
        return 0.0;
    }
    integrate(|t| kref(t, order) * kref(t + v, order), &breaks_within(vec![], lo, hi))
}

/// A sample with explicit bandwidth vectors and row-major copies of the data.
#[derive(Debug, Clone)]
pub struct Instance {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub order: KernelOrder,
    pub plan: BandwidthPlan,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn p(&self) -> usize {
        self.z[0].len()
    }
    pub fn q(&self) -> usize {
        self.x[0].len()
    }
    pub fn spec(&self) -> KernelSpec {
        KernelSpec::new(self.order)
    }
    pub fn hx(&self) -> Vec<f64> {
        self.plan.x_bandwidths(self.q())
    }
    pub fn hz(&self) -> Vec<f64> {
        self.plan.z_bandwidths(self.p())
    }
    pub fn dataset(&self) -> Dataset {
        Dataset::new(self.y.clone(), Matrix::from_rows(&self.x), Matrix::from_rows(&self.z)).unwrap()
    }
    pub fn core(&self) -> PrecomputedCore {
        build_core(&self.dataset(), &self.plan, self.spec(), Guards::default())
    }
}

/// Plan with explicit `a`, `b` and optional per-coordinate scales.
pub fn plan(n: usize, order: KernelOrder, a: f64, b: f64, x_scale: Vec<f64>, z_scale: Vec<f64>) -> BandwidthPlan {
    let mut plan = bandwidth_rule(n, 1.0, KernelSpec::new(order), ScaleMode::None).unwrap();
    plan.a = a;
    plan.b = b;
    if !x_scale.is_empty() || !z_scale.is_empty() {
        plan.scale_mode = ScaleMode::PerCoordinateStd;
    }
    plan.x_scale = x_scale;
    plan.z_scale = z_scale;
    plan
}

/// Random instance on `[0, 1]^(q+p)` with bandwidths wide enough that most
/// rows have neighbours. Odd seeds get unequal per-coordinate scales.
pub fn random_instance(seed: u64, n: usize, q: usize, p: usize, order: KernelOrder) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..q).map(|_| rng.random::<f64>()).collect()).collect();
    let z: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
    let a = rng.random_range(0.45..0.9);
    let b = rng.random_range(0.3..0.8);
    let (xs, zs) = if seed % 2 == 1 {
        (
            (0..q).map(|_| rng.random_range(0.8..1.3)).collect(),
            (0..p).map(|_| rng.random_range(0.8..1.3)).collect(),
        )
    } else {
        (vec![], vec![])
    };
    Instance {
        y,
        x,
        z,
        order,
        plan: plan(n, order, a, b, xs, zs),
    }
}

pub fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(s, t)| s <= t)
}

/// Brute-force estimator quantities, each written from its definition.
pub struct Oracle<'a> {
    pub inst: &'a Instance,
    hx: Vec<f64>,
    hz: Vec<f64>,
    s: f64,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let hx = inst.hx();
        let hz = inst.hz();
        let s = 1.0 / ((inst.n() as f64 - 1.0) * hx.iter().product::<f64>());
        Self { inst, hx, hz, s }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    fn zvol(&self) -> f64 {
        self.hz.iter().product()
    }

    /// `K((X_i - X_k)/a)` with the leave-one-out zero on the diagonal.
    pub fn kx(&self, i: usize, k: usize) -> f64 {
        if i == k {
            return 0.0;
        }
        let xi = &self.inst.x[i];
        let xk = &self.inst.x[k];
        (0..xi.len())
            .map(|m| kref((xi[m] - xk[m]) / self.hx[m], self.inst.order))
            .product()
    }

    fn lz(&self, z: &[f64], k: usize) -> f64 {
        let zk = &self.inst.z[k];
        (0..z.len())
            .map(|m| kref((z[m] - zk[m]) / self.hz[m], self.inst.order))
            .product()
    }

    pub fn fx(&self, i: usize) -> f64 {
        self.s * (0..self.inst.n()).map(|k| self.kx(i, k)).sum::<f64>()
    }

    pub fn u(&self, i: usize) -> f64 {
        let y = &self.inst.y;
        self.s * (0..self.inst.n()).map(|k| self.kx(i, k) * (y[i] - y[k])).sum::<f64>()
    }

    /// Nadaraya–Watson `m̂(X_i)` from the other rows.
    pub fn nw(&self, i: usize) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.inst.n() {
            let w = self.kx(i, k);
            num += w * self.inst.y[k];
            den += w;
        }
        num / den
    }

    /// `f̂_W(X_i, z)`.
    pub fn fw_at(&self, i: usize, z: &[f64]) -> f64 {
        self.s / self.zvol() * (0..self.inst.n()).map(|k| self.kx(i, k) * self.lz(z, k)).sum::<f64>()
    }

    pub fn fw(&self, i: usize) -> f64 {
        self.fw_at(i, &self.inst.z[i])
    }

    fn z_breaks(&self, m: usize) -> Vec<f64> {
        let b = self.hz[m];
        self.inst.z.iter().flat_map(|z| [z[m] - b, z[m] + b]).collect()
    }

    fn z_range(&self, m: usize) -> (f64, f64) {
        let b = self.hz[m];
        let lo = self.inst.z.iter().map(|z| z[m]).fold(f64::INFINITY, f64::min) - b;
        let hi = self.inst.z.iter().map(|z| z[m]).fold(f64::NEG_INFINITY, f64::max) + b;
        (lo, hi)
    }

    /// `∫_{z̄ ≤ z} f̂_W(X_i, z̄) dz̄` by quadrature.
    pub fn g_quad(&self, i: usize, z: &[f64]) -> f64 {
        let p = z.len();
        let mut grids = Vec::with_capacity(p);
        for m in 0..p {
            let (lo, _) = self.z_range(m);
            if z[m] <= lo {
                return 0.0;
            }
            grids.push(breaks_within(self.z_breaks(m), lo, z[m]));
        }
        match p {
            1 => integrate(|t| self.fw_at(i, &[t]), &grids[0]),
            2 => integrate2(|s, t| self.fw_at(i, &[s, t]), &grids[0], &grids[1]),
            _ => unreachable!(),
        }
    }

    /// `∫ f̂_W(X_i, z̄)² dz̄` by quadrature.
    pub fn delta_quad(&self, i: usize) -> f64 {
        let p = self.inst.p();
        let grids: Vec<Vec<f64>> = (0..p)
            .map(|m| {
                let (lo, hi) = self.z_range(m);
                breaks_within(self.z_breaks(m), lo, hi)
            })
            .collect();
        match p {
            1 => integrate(|t| self.fw_at(i, &[t]).powi(2), &grids[0]),
            2 => integrate2(|s, t| self.fw_at(i, &[s, t]).powi(2), &grids[0], &grids[1]),
            _ => unreachable!(),
        }
    }

    /// `Ĝ_n(Z_j; X_i) = s Σ_k K_ik Π_m Λ((Z_jm - Z_km)/b)` with `Λ` by quadrature.
    pub fn g_sum(&self, i: usize, j: usize) -> f64 {
        let zj = &self.inst.z[j];
        let mut acc = 0.0;
        for k in 0..self.inst.n() {
            let zk = &self.inst.z[k];
            let mut h = self.kx(i, k);
            for m in 0..zj.len() {
                h *= cdf_ref((zj[m] - zk[m]) / self.hz[m], self.inst.order);
            }
            acc += h;
        }
        self.s * acc
    }

    /// `Δ̂_n(X_i) = s² b^{-p} Σ_j Σ_k K_ij K_ik Π_m (k⋆k)((Z_jm - Z_km)/b)`.
    pub fn delta_sum(&self, i: usize) -> f64 {
        let n = self.inst.n();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                let mut h = self.kx(i, j) * self.kx(i, k);
                if h == 0.0 {
                    continue;
                }
                for m in 0..self.inst.p() {
                    h *= selfconv_ref((self.inst.z[j][m] - self.inst.z[k][m]) / self.hz[m], self.inst.order);
                }
                acc += h;
            }
        }
        self.s * self.s / self.zvol() * acc
    }

    /// `P̂_n 1_{Z_j}(Z_i)` with every ingredient expanded; degenerate rows
    /// keep the raw indicator.
    pub fn proj(&self, i: usize, j: usize, delta_floor: f64) -> f64 {
        let ind = if leq(&self.inst.z[i], &self.inst.z[j]) { 1.0 } else { 0.0 };
        let d = self.delta_sum(i);
        if d < delta_floor {
            return ind;
        }
        ind - self.fw(i) * self.g_sum(i, j) / d
    }

    /// `F̂_{Z|X}(Z_j | X_i)`, with the empirical CDF over `k ≠ i` below the floor.
    pub fn zcond(&self, i: usize, j: usize, fx_floor: f64) -> f64 {
        let n = self.inst.n();
        let zj = &self.inst.z[j];
        let fx = self.fx(i);
        if fx < fx_floor {
            let hits = (0..n).filter(|&k| k != i && leq(&self.inst.z[k], zj)).count();
            return hits as f64 / (n as f64 - 1.0);
        }
        let num: f64 = (0..n)
            .filter(|&k| leq(&self.inst.z[k], zj))
            .map(|k| self.kx(i, k))
            .sum();
        self.s * num / fx
    }

    /// `ε̂_i(Y_j) f̂_X(X_i) = s Σ_k K_ik [1(Y_i ≤ Y_j) - 1(Y_k ≤ Y_j)]`.
    pub fn ci_resid(&self, i: usize, j: usize) -> f64 {
        let y = &self.inst.y;
        let ind = |a: f64| if a <= y[j] { 1.0 } else { 0.0 };
        self.s * (0..self.inst.n()).map(|k| self.kx(i, k) * (ind(y[i]) - ind(y[k]))).sum::<f64>()
    }

    fn wleq(&self, i: usize, j: usize) -> bool {
        leq(&self.inst.x[i], &self.inst.x[j]) && leq(&self.inst.z[i], &self.inst.z[j])
    }

    /// `(1/n) Σ_i V_i u_i 1(X_i ≤ X_j) P̂_n 1_{Z_j}(Z_i)` for every `j`.
    pub fn projected(&self, v: Option<&[f64]>) -> Vec<f64> {
        let n = self.inst.n();
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    if !leq(&self.inst.x[i], &self.inst.x[j]) {
                        continue;
                    }
                    let w = v.map_or(1.0, |v| v[i]);
                    acc += w * self.u(i) * self.proj(i, j, 1e-12);
                }
                acc / n as f64
            })
            .collect()
    }

    /// `(1/n) Σ_i u_i 1(W_i ≤ W_j)`.
    pub fn dm(&self) -> Vec<f64> {
        let n = self.inst.n();
        (0..n)
            .map(|j| (0..n).filter(|&i| self.wleq(i, j)).map(|i| self.u(i)).sum::<f64>() / n as f64)
            .collect()
    }

    /// `(1/n) Σ_i V_i u_i 1(X_i ≤ X_j) [1(Z_i ≤ Z_j) - F̂_{Z|X}(Z_j | X_i)]`.
    pub fn dm_boot(&self, v: &[f64]) -> Vec<f64> {
        let n = self.inst.n();
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    if !leq(&self.inst.x[i], &self.inst.x[j]) {
                        continue;
                    }
                    let ind = if leq(&self.inst.z[i], &self.inst.z[j]) { 1.0 } else { 0.0 };
                    acc += v[i] * self.u(i) * (ind - self.zcond(i, j, 1e-12));
                }
                acc / n as f64
            })
            .collect()
    }

    /// `(1/n) Σ_i V_i ε̂_i(Y_j) f̂_X(X_i) 1(X_i ≤ X_j) P̂_n 1_{Z_j}(Z_i)`.
    pub fn ci(&self, v: Option<&[f64]>) -> Vec<f64> {
        let n = self.inst.n();
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    if !leq(&self.inst.x[i], &self.inst.x[j]) {
                        continue;
                    }
                    let w = v.map_or(1.0, |v| v[i]);
                    acc += w * self.ci_resid(i, j) * self.proj(i, j, 1e-12);
                }
                acc / n as f64
            })
            .collect()
    }

    /// `(1/n) Σ_i ε̂_i(Y_j) f̂_X(X_i) 1(W_i ≤ W_j)`.
    pub fn dm_ci(&self) -> Vec<f64> {
        let n = self.inst.n();
        (0..n)
            .map(|j| (0..n).filter(|&i| self.wleq(i, j)).map(|i| self.ci_resid(i, j)).sum::<f64>() / n as f64)
            .collect()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max)
}

/// Grid of instance shapes used by the property checks.
pub fn shapes() -> Vec<(usize, usize, KernelOrder)> {
    let mut v = Vec::new();
    for (q, p) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        for order in [KernelOrder::Second, KernelOrder::Fourth] {
            v.push((q, p, order));
        }
    }
    v
}
