//! Multiplier bootstrap, critical values, p-values and the end-to-end test
//! runner.
//!
//! The precomputed core is built once per dataset. Each bootstrap replicate
//! draws one multiplier vector and reweights the rows of every process's
//! summand matrix, so a replicate costs O(n²) and never touches the kernel
//! matrices.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{build_core, Dataset, Diagnostics, Guards, PrecomputedCore};
use crate::kernels::{bandwidth_rule, BandwidthPlan, KernelOrder, KernelSpec, ScaleMode};
use crate::matrix::Matrix;
use crate::seeds::{stream_rng, StreamRole};
use crate::statistics::{
    bootstrap_summands, ci_residual_matrix, observed_summands, ProcessKind, ProcessValues, StatPair,
    Summands,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Law of the bootstrap multipliers; each has mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierKind {
    /// Two-point law on `(1 ∓ √5)/2` with probabilities `(√5 ± 1)/(2√5)`.
    #[default]
    MammenTwoPoint,
    Rademacher,
    StandardNormal,
}

impl MultiplierKind {
    /// `(values, probabilities)` of the two-point laws.
    pub fn support(self) -> Option<([f64; 2], [f64; 2])> {
        let s5 = 5f64.sqrt();
        match self {
            Self::MammenTwoPoint => Some((
                [(1.0 - s5) / 2.0, (1.0 + s5) / 2.0],
                [(s5 + 1.0) / (2.0 * s5), (s5 - 1.0) / (2.0 * s5)],
            )),
            Self::Rademacher => Some(([-1.0, 1.0], [0.5, 0.5])),
            Self::StandardNormal => None,
        }
    }
}

/// `n` independent multipliers.
pub fn draw_multipliers<R: Rng + ?Sized>(n: usize, kind: MultiplierKind, rng: &mut R) -> Vec<f64> {
    match kind {
        MultiplierKind::MammenTwoPoint => {
            let ([lo, hi], [p_lo, _]) = kind.support().expect("two-point law");
            (0..n)
                .map(|_| if rng.random::<f64>() < p_lo { lo } else { hi })
                .collect()
        }
        MultiplierKind::Rademacher => (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
        MultiplierKind::StandardNormal => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

/// Bootstrap process `(1/n) Σ_i V_i S_i(·)` for `kind`.
///
/// Builds the summands from the core on every call, so it is meant for
/// one-off evaluation; [`run_test`] builds them once and reuses them.
pub fn bootstrap_process(core: &PrecomputedCore, multipliers: &[f64], kind: ProcessKind) -> ProcessValues {
    let resid = kind.is_ci().then(|| ci_residual_matrix(core, &core.y));
    bootstrap_summands(core, kind, resid.as_ref()).apply(Some(multipliers))
}

/// 1-based index `⌈B(1-α)⌉` of the critical order statistic, clamped to
/// `[1, B]`, and whether clamping from below was needed.
pub fn order_statistic_index(b: usize, alpha: f64) -> (usize, bool) {
    let x = b as f64 * (1.0 - alpha);
    // absorb representation error so that e.g. 200·0.95 lands on 190
    let k = (x - 1e-9).ceil();
    if k < 1.0 {
        (1, true)
    } else {
        ((k as usize).min(b), false)
    }
}

/// The `⌈B(1-α)⌉`-th smallest draw.
pub fn critical_value(draws: &[f64], alpha: f64) -> f64 {
    assert!(!draws.is_empty(), "critical value needs at least one draw");
    let (k, clamped) = order_statistic_index(draws.len(), alpha);
    if clamped {
        log::warn!(
            "B(1-alpha) = {} < 1; using the smallest draw as critical value",
            draws.len() as f64 * (1.0 - alpha)
        );
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted[k - 1]
}

/// `(1 + #{b : draw_b ≥ observed}) / (B + 1)`.
pub fn p_value(draws: &[f64], observed: f64) -> f64 {
    let exceed = draws.iter().filter(|&&d| d >= observed).count();
    (1 + exceed) as f64 / (draws.len() + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    #[default]
    Significance,
    ConditionalIndependence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Unprojected baseline.
    Dm,
    /// Projected weights.
    Projected,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::Dm => "DM",
            Self::Projected => "PJ",
        }
    }

    pub fn process_kind(self, test: TestKind) -> ProcessKind {
        match (self, test) {
            (Self::Projected, TestKind::Significance) => ProcessKind::Projected,
            (Self::Dm, TestKind::Significance) => ProcessKind::Dm,
            (Self::Projected, TestKind::ConditionalIndependence) => ProcessKind::ProjectedCi,
            (Self::Dm, TestKind::ConditionalIndependence) => ProcessKind::DmCi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Cvm,
    Ks,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Self::Cvm => "CvM",
            Self::Ks => "KS",
        }
    }

    fn pick(self, pair: &StatPair) -> f64 {
        match self {
            Self::Cvm => pair.cvm,
            Self::Ks => pair.ks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Projected,
    Dm,
    #[default]
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            Self::Projected => vec![Method::Projected],
            Self::Dm => vec![Method::Dm],
            Self::Both => vec![Method::Dm, Method::Projected],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticChoice {
    Cvm,
    Ks,
    #[default]
    Both,
}

impl StatisticChoice {
    pub fn statistics(self) -> Vec<Statistic> {
        match self {
            Self::Cvm => vec![Statistic::Cvm],
            Self::Ks => vec![Statistic::Ks],
            Self::Both => vec![Statistic::Cvm, Statistic::Ks],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub test_kind: TestKind,
    pub method: MethodChoice,
    pub statistic: StatisticChoice,
    pub order: KernelOrder,
    pub c: f64,
    pub scale_mode: ScaleMode,
    pub bootstrap_reps: usize,
    pub alphas: Vec<f64>,
    pub multiplier: MultiplierKind,
    pub seed: u64,
    pub delta_floor: f64,
    pub fx_floor: f64,
    /// Maximum number of bootstrap draws kept in the report; `None` keeps all.
    pub draws_cap: Option<usize>,
    /// Record wall-clock time in the report. Off by default so that reports
    /// are reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            test_kind: TestKind::Significance,
            method: MethodChoice::Both,
            statistic: StatisticChoice::Both,
            order: KernelOrder::Second,
            c: 1.0,
            scale_mode: ScaleMode::None,
            bootstrap_reps: 199,
            alphas: vec![0.10, 0.05, 0.01],
            multiplier: MultiplierKind::MammenTwoPoint,
            seed: 0,
            delta_floor: 1e-12,
            fx_floor: 1e-12,
            draws_cap: None,
            record_timing: false,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap_reps < 1 {
            return Err(Error::Config("bootstrap count B must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("at least one significance level is required".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Config(format!("significance level must lie in (0, 1), got {a}")));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("bandwidth coefficient must be positive, got {}", self.c)));
        }
        if !(self.delta_floor > 0.0 && self.fx_floor > 0.0) {
            return Err(Error::Config("floors must be positive".into()));
        }
        Ok(())
    }

    pub fn guards(&self) -> Guards {
        Guards {
            fx_floor: self.fx_floor,
            delta_floor: self.delta_floor,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.order)
    }

    /// Warnings about level/B combinations whose critical value is coarse.
    pub fn warnings(&self) -> Vec<String> {
        let b = self.bootstrap_reps as f64;
        self.alphas
            .iter()
            .filter_map(|&a| {
                if b * (1.0 - a) < 1.0 {
                    Some(format!("B(1-alpha) < 1 at alpha = {a}; critical value is the smallest draw"))
                } else if b < 1.0 / a - 1.0 {
                    Some(format!("B = {} is below 1/alpha - 1 at alpha = {a}", self.bootstrap_reps))
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDecision {
    pub alpha: f64,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticResult {
    pub method: Method,
    pub statistic: Statistic,
    /// Scaled observed statistic (`n·CvM_n` or `√n·KS_n`).
    pub observed: f64,
    pub p_value: f64,
    pub levels: Vec<LevelDecision>,
    /// Bootstrap draws in replicate order, truncated to the configured cap.
    pub draws: Vec<f64>,
    pub draws_total: usize,
}

impl StatisticResult {
    pub fn reject(&self, alpha: f64) -> Option<bool> {
        self.levels
            .iter()
            .find(|l| (l.alpha - alpha).abs() < 1e-12)
            .map(|l| l.reject)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub config: TestConfig,
    pub bandwidths: BandwidthPlan,
    pub results: Vec<StatisticResult>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl TestReport {
    pub fn result(&self, method: Method, statistic: Statistic) -> Option<&StatisticResult> {
        self.results
            .iter()
            .find(|r| r.method == method && r.statistic == statistic)
    }

    pub fn reject(&self, method: Method, statistic: Statistic, alpha: f64) -> Option<bool> {
        self.result(method, statistic)?.reject(alpha)
    }
}

/// Decisions from observed statistics and bootstrap draws.
pub fn decide(
    method: Method,
    statistic: Statistic,
    observed: f64,
    draws: Vec<f64>,
    alphas: &[f64],
    cap: Option<usize>,
) -> StatisticResult {
    let levels = alphas
        .iter()
        .map(|&alpha| {
            let critical_value = critical_value(&draws, alpha);
            LevelDecision {
                alpha,
                critical_value,
                reject: observed > critical_value,
            }
        })
        .collect();
    let p = p_value(&draws, observed);
    let total = draws.len();
    let mut draws = draws;
    if let Some(cap) = cap {
        draws.truncate(cap);
    }
    StatisticResult {
        method,
        statistic,
        observed,
        p_value: p,
        levels,
        draws,
        draws_total: total,
    }
}

/// Observed and bootstrap summands for one method.
struct MethodPlan {
    method: Method,
    observed: Summands,
    // `None` when the bootstrap reuses the observed summands.
    bootstrap: Option<Summands>,
}

impl MethodPlan {
    fn boot(&self) -> &Summands {
        self.bootstrap.as_ref().unwrap_or(&self.observed)
    }
}

/// Builds the bandwidth plan for `data` under `cfg`.
pub fn plan_for(data: &Dataset, cfg: &TestConfig) -> Result<BandwidthPlan> {
    Ok(bandwidth_rule(data.n(), cfg.c, cfg.kernel(), cfg.scale_mode)?
        .with_data_scales(&data.x_columns(), &data.z_columns()))
}

/// Runs the configured test(s) on `data`.
pub fn run_test(data: &Dataset, cfg: &TestConfig) -> Result<TestReport> {
    cfg.validate()?;
    let started = cfg.record_timing.then(Instant::now);
    let plan = plan_for(data, cfg)?;
    let core = build_core(data, &plan, cfg.kernel(), cfg.guards());
    let mut report = run_test_on_core(&core, cfg);
    report.n = data.n();
    report.q = data.q();
    report.p = data.p();
    report.wall_time_secs = started.map(|t| t.elapsed().as_secs_f64());
    Ok(report)
}

/// Runs the configured test(s) against an existing core. The core is only
/// read; no kernel, `Ĝ_n`, `Δ̂_n` or projection quantity is rebuilt.
pub fn run_test_on_core(core: &PrecomputedCore, cfg: &TestConfig) -> TestReport {
    let n = core.n();
    let resid: Option<Matrix> =
        (cfg.test_kind == TestKind::ConditionalIndependence).then(|| ci_residual_matrix(core, &core.y));

    let plans: Vec<MethodPlan> = cfg
        .method
        .methods()
        .into_iter()
        .map(|method| {
            let kind = method.process_kind(cfg.test_kind);
            let observed = observed_summands(core, kind, resid.as_ref());
            let bootstrap = (!kind.is_projected()).then(|| bootstrap_summands(core, kind, resid.as_ref()));
            MethodPlan {
                method,
                observed,
                bootstrap,
            }
        })
        .collect();

    let observed: Vec<StatPair> = plans
        .iter()
        .map(|m| StatPair::from_process(&m.observed.apply(None)))
        .collect();

    let draws: Vec<Vec<StatPair>> = (0..cfg.bootstrap_reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(cfg.seed, StreamRole::Multipliers, b as u64);
            let v = draw_multipliers(n, cfg.multiplier, &mut rng);
            plans
                .iter()
                .map(|m| StatPair::from_process(&m.boot().apply(Some(&v))))
                .collect()
        })
        .collect();

    let mut results = Vec::new();
    for (mi, m) in plans.iter().enumerate() {
        for stat in cfg.statistic.statistics() {
            let d: Vec<f64> = draws.iter().map(|row| stat.pick(&row[mi])).collect();
            results.push(decide(
                m.method,
                stat,
                stat.pick(&observed[mi]),
                d,
                &cfg.alphas,
                cfg.draws_cap,
            ));
        }
    }

    TestReport {
        schema_version: SCHEMA_VERSION,
        n,
        q: core.q(),
        p: core.p(),
        config: cfg.clone(),
        bandwidths: core.plan.clone(),
        results,
        diagnostics: core.diagnostics,
        warnings: cfg.warnings(),
        wall_time_secs: None,
    }
}
