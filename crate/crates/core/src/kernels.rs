//! Univariate Epanechnikov kernels of order 2 and 4, their closed-form
//! antiderivatives and self-convolutions, product kernels, and the
//! rule-of-thumb bandwidths.
//!
//! All kernels are supported on [-1, 1]. The order-4 kernel is the
//! multiplicative construction `(15/8)(1 - 7u²/3) k₂(u)`, i.e.
//! `(15/32)(3 - 10u² + 7u⁴)`, which satisfies `∫k = 1` and
//! `∫uⁱk = 0` for `i = 1, 2, 3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, sorted_breaks, GaussLegendre};

/// Kernel order `l`: the index of the first non-vanishing moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum KernelOrder {
    Second,
    Fourth,
}

impl KernelOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    /// Exponent of the rule-of-thumb bandwidth `c·n^rate`.
    pub fn rate_exponent(self) -> f64 {
        match self {
            Self::Second => -1.0 / 3.0,
            Self::Fourth => -1.0 / 6.0,
        }
    }
}

impl TryFrom<u32> for KernelOrder {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        match v {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            _ => Err(Error::Config(format!("kernel order must be 2 or 4, got {v}"))),
        }
    }
}

impl From<KernelOrder> for u32 {
    fn from(o: KernelOrder) -> u32 {
        o.as_u32()
    }
}

pub const SUPPORT_RADIUS: f64 = 1.0;

/// The univariate kernel used for both `K` (over X) and `L` (over Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub order: KernelOrder,
}

impl KernelSpec {
    pub fn new(order: KernelOrder) -> Self {
        Self { order }
    }

    pub fn second() -> Self {
        Self::new(KernelOrder::Second)
    }

    pub fn fourth() -> Self {
        Self::new(KernelOrder::Fourth)
    }

    pub fn support_radius(&self) -> f64 {
        SUPPORT_RADIUS
    }
}

/// Anything that behaves like a compactly supported univariate kernel.
/// Implemented by [`KernelSpec`]; the self-check is generic over it.
pub trait UnivariateKernel {
    /// Order `l`: moments `0..l` are `δ_{i0}`.
    fn order(&self) -> u32;
    fn eval(&self, u: f64) -> f64;
    fn cdf(&self, u: f64) -> f64;
    fn selfconv(&self, v: f64) -> f64;
}

impl UnivariateKernel for KernelSpec {
    fn order(&self) -> u32 {
        self.order.as_u32()
    }
    fn eval(&self, u: f64) -> f64 {
        epanechnikov(u, *self)
    }
    fn cdf(&self, u: f64) -> f64 {
        kernel_cdf(u, *self)
    }
    fn selfconv(&self, v: f64) -> f64 {
        kernel_selfconv(v, *self)
    }
}

#[inline]
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

// (k⋆k)(v) as a polynomial in w = |v| on [0, 2], lowest degree first.
const SELFCONV_2: [f64; 6] = [3.0 / 5.0, 0.0, -3.0 / 4.0, 3.0 / 8.0, 0.0, -3.0 / 160.0];
const SELFCONV_4: [f64; 10] = [
    5.0 / 4.0,
    0.0,
    -75.0 / 16.0,
    75.0 / 32.0,
    105.0 / 32.0,
    -165.0 / 64.0,
    0.0,
    75.0 / 256.0,
    0.0,
    -35.0 / 2048.0,
];

/// `k_l(u)`.
#[inline]
pub fn epanechnikov(u: f64, spec: KernelSpec) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    let u2 = u * u;
    match spec.order {
        KernelOrder::Second => 0.75 * (1.0 - u2),
        KernelOrder::Fourth => (15.0 / 32.0) * (3.0 - 10.0 * u2 + 7.0 * u2 * u2),
    }
}

/// `∫_{-∞}^{u} k_l(t) dt`, exactly 0 below the support and 1 above it.
#[inline]
pub fn kernel_cdf(u: f64, spec: KernelSpec) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let u2 = u * u;
    match spec.order {
        KernelOrder::Second => 0.5 + 0.75 * u * (1.0 - u2 / 3.0),
        KernelOrder::Fourth => {
            0.5 + (15.0 / 32.0) * u * (3.0 - (10.0 / 3.0) * u2 + (7.0 / 5.0) * u2 * u2)
        }
    }
}

/// `(k⋆k)(v) = ∫ k_l(u) k_l(u + v) du`; even in `v`, zero for `|v| ≥ 2`.
#[inline]
pub fn kernel_selfconv(v: f64, spec: KernelSpec) -> f64 {
    let w = v.abs();
    if w >= 2.0 {
        return 0.0;
    }
    match spec.order {
        KernelOrder::Second => horner(&SELFCONV_2, w),
        KernelOrder::Fourth => horner(&SELFCONV_4, w),
    }
}

/// `Π_m k_l(diff_m / h)`. Unscaled: callers apply the `1/h^d` factor.
#[inline]
pub fn product_kernel(diff: &[f64], h: f64, spec: KernelSpec) -> f64 {
    let mut acc = 1.0;
    for &d in diff {
        acc *= epanechnikov(d / h, spec);
        if acc == 0.0 {
            break;
        }
    }
    acc
}

/// Per-coordinate bandwidth version of [`product_kernel`].
#[inline]
pub fn product_kernel_h(diff: &[f64], h: &[f64], spec: KernelSpec) -> f64 {
    let mut acc = 1.0;
    for (&d, &hm) in diff.iter().zip(h) {
        acc *= epanechnikov(d / hm, spec);
        if acc == 0.0 {
            break;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    #[default]
    None,
    PerCoordinateStd,
}

/// Bandwidths for X (`a`) and Z (`b`).
///
/// With [`ScaleMode::None`] every coordinate of X uses `a` and every
/// coordinate of Z uses `b`. With [`ScaleMode::PerCoordinateStd`] each
/// coordinate's bandwidth is additionally multiplied by that coordinate's
/// sample standard deviation, stored in `x_scale` / `z_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPlan {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub rate_exponent: f64,
    pub scale_mode: ScaleMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_scale: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_scale: Vec<f64>,
}

impl BandwidthPlan {
    /// Bandwidths for each X coordinate.
    pub fn x_bandwidths(&self, q: usize) -> Vec<f64> {
        (0..q)
            .map(|m| self.a * self.x_scale.get(m).copied().unwrap_or(1.0))
            .collect()
    }

    /// Bandwidths for each Z coordinate.
    pub fn z_bandwidths(&self, p: usize) -> Vec<f64> {
        (0..p)
            .map(|m| self.b * self.z_scale.get(m).copied().unwrap_or(1.0))
            .collect()
    }

    /// Attaches per-coordinate scales from the sample when the plan asks
    /// for them. Columns with zero spread keep scale 1.
    pub fn with_data_scales(mut self, x_cols: &[Vec<f64>], z_cols: &[Vec<f64>]) -> Self {
        if self.scale_mode == ScaleMode::PerCoordinateStd {
            self.x_scale = x_cols.iter().map(|c| std_or_one(c)).collect();
            self.z_scale = z_cols.iter().map(|c| std_or_one(c)).collect();
        }
        self
    }
}

fn std_or_one(col: &[f64]) -> f64 {
    let n = col.len() as f64;
    if col.len() < 2 {
        return 1.0;
    }
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

/// Rule-of-thumb bandwidths `a = b = c·n^{-1/3}` (order 2) or
/// `c·n^{-1/6}` (order 4).
pub fn bandwidth_rule(
    n: usize,
    c: f64,
    spec: KernelSpec,
    scale_mode: ScaleMode,
) -> Result<BandwidthPlan> {
    if n < 3 {
        return Err(Error::SampleTooSmall(n));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("bandwidth coefficient must be positive, got {c}")));
    }
    let rate = spec.order.rate_exponent();
    let h = c * (n as f64).powf(rate);
    Ok(BandwidthPlan {
        c,
        a: h,
        b: h,
        rate_exponent: rate,
        scale_mode,
        x_scale: Vec::new(),
        z_scale: Vec::new(),
    })
}

/// Per-check tolerances for [`selfcheck`].
#[derive(Debug, Clone, Copy)]
pub struct SelfcheckTolerances {
    pub moments: f64,
    pub cdf: f64,
    pub selfconv: f64,
    pub derivative: f64,
}

impl Default for SelfcheckTolerances {
    fn default() -> Self {
        Self {
            moments: 1e-10,
            cdf: 1e-8,
            selfconv: 1e-8,
            derivative: 1e-6,
        }
    }
}

impl SelfcheckTolerances {
    /// Every check at the same tolerance.
    pub fn uniform(tol: f64) -> Self {
        Self {
            moments: tol,
            cdf: tol,
            selfconv: tol,
            derivative: tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Verifies a kernel against quadrature: moment conditions, CDF as the
/// integral of the density, self-convolution, CDF symmetry and the
/// finite-difference derivative of the CDF.
pub fn selfcheck<K: UnivariateKernel + ?Sized>(
    kernel: &K,
    label: &str,
    tol: SelfcheckTolerances,
) -> Vec<CheckOutcome> {
    let rule = GaussLegendre::new(10);
    let mut out = Vec::new();
    let mut push = |name: String, err: f64, tolerance: f64| {
        let passed = err.is_finite() && err <= tolerance;
        out.push(CheckOutcome {
            name: format!("{label}: {name}"),
            max_error: err,
            tolerance,
            passed,
        });
    };

    let l = kernel.order();
    let mut moment_err: f64 = 0.0;
    for i in 0..l {
        let m = integrate_1d(
            |u| u.powi(i as i32) * kernel.eval(u),
            &[-1.0, 0.0, 1.0],
            &rule,
            f64::INFINITY,
        )
        .unwrap_or(f64::NAN);
        let target = if i == 0 { 1.0 } else { 0.0 };
        moment_err = moment_err.max((m - target).abs());
    }
    push(format!("moments 0..{}", l - 1), moment_err, tol.moments);

    let grid: Vec<f64> = (0..=40).map(|k| -1.0 + 0.05 * k as f64).collect();
    let mut cdf_err: f64 = 0.0;
    for &u in &grid {
        let q = if u <= -1.0 {
            0.0
        } else {
            let breaks = sorted_breaks(vec![-1.0, u.min(0.0), u]);
            integrate_1d(|t| kernel.eval(t), &breaks, &rule, f64::INFINITY).unwrap_or(f64::NAN)
        };
        cdf_err = cdf_err.max((kernel.cdf(u) - q).abs());
    }
    cdf_err = cdf_err
        .max(kernel.cdf(-1.5).abs())
        .max((kernel.cdf(1.5) - 1.0).abs());
    push("cdf vs quadrature".into(), cdf_err, tol.cdf);

    let mut sym_err: f64 = 0.0;
    for &u in &grid {
        sym_err = sym_err.max((kernel.cdf(u) + kernel.cdf(-u) - 1.0).abs());
    }
    push("cdf symmetry".into(), sym_err, tol.cdf);

    let mut sc_err: f64 = 0.0;
    for k in 0..=40 {
        let v = -2.0 + 0.1 * k as f64;
        let lo = (-1.0f64).max(-1.0 - v);
        let hi = 1.0f64.min(1.0 - v);
        let q = if hi > lo {
            let breaks = sorted_breaks(vec![lo, hi, 0.0f64.clamp(lo, hi), (-v).clamp(lo, hi)]);
            integrate_1d(|u| kernel.eval(u) * kernel.eval(u + v), &breaks, &rule, f64::INFINITY)
                .unwrap_or(f64::NAN)
        } else {
            0.0
        };
        sc_err = sc_err.max((kernel.selfconv(v) - q).abs());
    }
    sc_err = sc_err.max(kernel.selfconv(2.5).abs());
    push("self-convolution vs quadrature".into(), sc_err, tol.selfconv);

    let h = 1e-5;
    let mut d_err: f64 = 0.0;
    for k in 1..40 {
        let u = -0.975 + 0.05 * k as f64;
        if u.abs() >= 1.0 - h {
            continue;
        }
        let fd = (kernel.cdf(u + h) - kernel.cdf(u - h)) / (2.0 * h);
        d_err = d_err.max((fd - kernel.eval(u)).abs());
    }
    push("cdf derivative".into(), d_err, tol.derivative);

    out
}
