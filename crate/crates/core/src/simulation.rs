//! Data-generating processes, the Monte Carlo driver and rejection-rate
//! tables.
//!
//! Designs: the first coordinate of X is tied to the first coordinate of Z
//! (`X⁽¹⁾ = Z⁽¹⁾ + U`) or all coordinates are independent `N(0,1)` or
//! `U(0,1)`. Extra coordinates follow the design's marginal law
//! independently. Responses:
//! - mean: `Y = 1 + X⁽¹⁾ + Ψ + ε`
//! - variance: `Y = 1 + (X⁽¹⁾ + Ψ) ε`
//!
//! with `Ψ = sin(γ Z⁽¹⁾)` or `exp(γ Z⁽¹⁾)` and `ε ~ N(0,1)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{run_test, Method, Statistic, TestConfig, TestKind};
use crate::error::{Error, Result};
use crate::estimators::{Dataset, Diagnostics};
use crate::kernels::KernelOrder;
use crate::matrix::Matrix;
use crate::seeds::{derive_seed, stream_rng, StreamRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    XEqZPlusU,
    IndependentNormal,
    IndependentUniform,
}

impl Design {
    pub fn label(self) -> &'static str {
        match self {
            Self::XEqZPlusU => "x_eq_z_plus_u",
            Self::IndependentNormal => "independent_normal",
            Self::IndependentUniform => "independent_uniform",
        }
    }

    /// Whether X has a density bounded away from zero on its support, the
    /// support condition the unprojected bootstrap relies on.
    pub fn bounded_support(self) -> bool {
        matches!(self, Self::IndependentUniform)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Sine,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Mean,
    Variance,
}

impl Response {
    pub fn for_test(kind: TestKind) -> Self {
        match kind {
            TestKind::Significance => Self::Mean,
            TestKind::ConditionalIndependence => Self::Variance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub design: Design,
    pub p: usize,
    pub q: usize,
    pub alternative: Alternative,
    pub gamma: f64,
    pub response: Response,
    pub n: usize,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.p) || !(1..=2).contains(&self.q) {
            return Err(Error::UnsupportedDesign(format!(
                "dimensions p = {}, q = {} outside {{1, 2}}",
                self.p, self.q
            )));
        }
        if self.n < 3 {
            return Err(Error::SampleTooSmall(self.n));
        }
        if !self.gamma.is_finite() {
            return Err(Error::UnsupportedDesign("gamma must be finite".into()));
        }
        Ok(())
    }

    /// Kernel order used for this dimension pair: 2 when `p = q = 1`,
    /// otherwise 4.
    pub fn default_order(&self) -> KernelOrder {
        default_order(self.p, self.q)
    }
}

pub fn default_order(p: usize, q: usize) -> KernelOrder {
    if p.max(q) >= 2 {
        KernelOrder::Fourth
    } else {
        KernelOrder::Second
    }
}

/// Draws one sample from `spec`.
pub fn generate<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    let (n, p, q) = (spec.n, spec.p, spec.q);
    let marginal = |rng: &mut R| -> f64 {
        match spec.design {
            Design::IndependentUniform => rng.random::<f64>(),
            _ => rng.sample(StandardNormal),
        }
    };
    let mut x = Matrix::zeros(n, q);
    let mut z = Matrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        for m in 0..p {
            z.set(i, m, marginal(rng));
        }
        match spec.design {
            Design::XEqZPlusU => {
                let u: f64 = rng.sample(StandardNormal);
                x.set(i, 0, z.get(i, 0) + u);
            }
            _ => x.set(i, 0, marginal(rng)),
        }
        for m in 1..q {
            x.set(i, m, marginal(rng));
        }
        let eps: f64 = rng.sample(StandardNormal);
        let z1 = z.get(i, 0);
        let psi = match spec.alternative {
            Alternative::Sine => (spec.gamma * z1).sin(),
            Alternative::Exp => (spec.gamma * z1).exp(),
        };
        let x1 = x.get(i, 0);
        y.push(match spec.response {
            Response::Mean => 1.0 + x1 + psi + eps,
            Response::Variance => 1.0 + (x1 + psi) * eps,
        });
    }
    Dataset::new(y, x, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub method: Method,
    pub statistic: Statistic,
    pub alpha: f64,
    pub rejections: usize,
    pub rate: f64,
    /// Monte Carlo standard error `√(r(1-r)/R)`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub dgp: DgpSpec,
    pub config: TestConfig,
    pub reps: usize,
    pub master_seed: u64,
    pub cells: Vec<RateCell>,
    pub diagnostics: Diagnostics,
}

impl SimulationResult {
    pub fn rate(&self, method: Method, statistic: Statistic, alpha: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.statistic == statistic && (c.alpha - alpha).abs() < 1e-12)
            .map(|c| c.rate)
    }
}

/// Reject flags of one replication, keyed by (method, statistic, level index).
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub flags: BTreeMap<(Method, Statistic, usize), bool>,
    pub diagnostics: Diagnostics,
}

/// One generate + test cycle with seeds derived from `(master_seed, rep)`.
pub fn run_replication(spec: &DgpSpec, cfg: &TestConfig, master_seed: u64, rep: usize) -> Result<RepOutcome> {
    let mut rng = stream_rng(master_seed, StreamRole::Data, rep as u64);
    let data = generate(spec, &mut rng)?;
    let cfg = TestConfig {
        seed: derive_seed(master_seed, StreamRole::Multipliers, rep as u64),
        draws_cap: Some(0),
        record_timing: false,
        ..cfg.clone()
    };
    let report = run_test(&data, &cfg)?;
    let mut flags = BTreeMap::new();
    for r in &report.results {
        for (k, l) in r.levels.iter().enumerate() {
            flags.insert((r.method, r.statistic, k), l.reject);
        }
    }
    Ok(RepOutcome {
        flags,
        diagnostics: report.diagnostics,
    })
}

/// Aggregates replication outcomes into rejection rates.
pub fn aggregate(spec: &DgpSpec, cfg: &TestConfig, master_seed: u64, outcomes: &[RepOutcome]) -> SimulationResult {
    let mut counts: BTreeMap<(Method, Statistic, usize), usize> = BTreeMap::new();
    let mut diagnostics = Diagnostics::default();
    for o in outcomes {
        for (&key, &rej) in &o.flags {
            *counts.entry(key).or_default() += usize::from(rej);
        }
        diagnostics += o.diagnostics;
    }
    let reps = outcomes.len();
    let cells = counts
        .into_iter()
        .map(|((method, statistic, k), rejections)| {
            let rate = rejections as f64 / reps as f64;
            RateCell {
                method,
                statistic,
                alpha: cfg.alphas[k],
                rejections,
                rate,
                se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            }
        })
        .collect();
    SimulationResult {
        dgp: spec.clone(),
        config: cfg.clone(),
        reps,
        master_seed,
        cells,
        diagnostics,
    }
}

/// `reps` independent replications, run in parallel.
pub fn run_monte_carlo(spec: &DgpSpec, cfg: &TestConfig, reps: usize, master_seed: u64) -> Result<SimulationResult> {
    if reps < 1 {
        return Err(Error::Config("at least one Monte Carlo replication is required".into()));
    }
    spec.validate()?;
    cfg.validate()?;
    let outcomes: Vec<RepOutcome> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            run_replication(spec, cfg, master_seed, rep).map_err(|e| Error::Replication {
                rep,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(spec, cfg, master_seed, &outcomes))
}

/// What varies across the columns of a table: γ (sine tables) or the
/// bandwidth coefficient `c` (exp tables).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnAxis {
    Gamma,
    C,
}

impl ColumnAxis {
    fn header(self) -> &'static str {
        match self {
            Self::Gamma => "alpha/gamma",
            Self::C => "alpha/c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub n: usize,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub label: String,
    pub p: usize,
    pub q: usize,
    pub columns: Vec<ColumnSpec>,
}

/// A reproducible table: design, test and grid of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePreset {
    pub id: usize,
    pub title: String,
    pub test_kind: TestKind,
    pub design: Design,
    pub alternative: Alternative,
    pub axis: ColumnAxis,
    pub blocks: Vec<BlockSpec>,
}

const SAMPLE_SIZES: [usize; 2] = [200, 400];
const COEFFICIENTS: [f64; 3] = [0.5, 1.0, 2.0];
const GAMMAS: [f64; 3] = [0.0, 5.0, 10.0];

fn design_caption(design: Design, p: usize, q: usize) -> String {
    let law = match design {
        Design::IndependentUniform => "U(0,1)",
        _ => "N(0,1)",
    };
    let xs = if q == 1 { "X".to_string() } else { "X(1), X(2)".to_string() };
    let zs = if p == 1 { "Z".to_string() } else { "Z(1), Z(2)".to_string() };
    match design {
        Design::XEqZPlusU => {
            let x1 = if q == 1 { "X" } else { "X(1)" };
            let z1 = if p == 1 { "Z" } else { "Z(1)" };
            format!("{x1}={z1}+U, {zs} ~ {law} and U ~ N(0,1)")
        }
        _ => format!("{xs} and {zs} ~ {law}"),
    }
}

fn sine_table(id: usize, test_kind: TestKind, design: Design, p: usize, q: usize) -> TablePreset {
    let what = match test_kind {
        TestKind::Significance => "Significance test",
        TestKind::ConditionalIndependence => "Testing conditional independence",
    };
    let blocks = COEFFICIENTS
        .iter()
        .map(|&c| BlockSpec {
            label: format!("c={c}"),
            p,
            q,
            columns: SAMPLE_SIZES
                .iter()
                .flat_map(|&n| GAMMAS.iter().map(move |&gamma| ColumnSpec { n, c, gamma }))
                .collect(),
        })
        .collect();
    TablePreset {
        id,
        title: format!("{what} when Psi = sin(gamma Z(1)), {}", design_caption(design, p, q)),
        test_kind,
        design,
        alternative: Alternative::Sine,
        axis: ColumnAxis::Gamma,
        blocks,
    }
}

fn exp_table(id: usize, test_kind: TestKind, design: Design, gamma: f64) -> TablePreset {
    let what = match test_kind {
        TestKind::Significance => "Power of significance test",
        TestKind::ConditionalIndependence => "Power of testing conditional independence",
    };
    let blocks = [(1, 1), (2, 1), (1, 2)]
        .iter()
        .map(|&(p, q)| BlockSpec {
            label: format!("p={p},q={q}"),
            p,
            q,
            columns: SAMPLE_SIZES
                .iter()
                .flat_map(|&n| COEFFICIENTS.iter().map(move |&c| ColumnSpec { n, c, gamma }))
                .collect(),
        })
        .collect();
    TablePreset {
        id,
        title: format!("{what} when Psi = exp(gamma Z(1)), gamma = {gamma}, {}", design_caption(design, 1, 1)),
        test_kind,
        design,
        alternative: Alternative::Exp,
        axis: ColumnAxis::C,
        blocks,
    }
}

pub const PRESET_COUNT: usize = 24;

/// Presets `table1` … `table24`, in this order: significance and
/// conditional-independence tables for `p = q = 1`, then `p = 2`, `q = 2`
/// and the exponential alternatives.
///
/// `exp_gamma` sets γ for the exponential-alternative tables.
pub fn preset(id: usize, exp_gamma: f64) -> Option<TablePreset> {
    use Design::*;
    use TestKind::*;
    let designs = [XEqZPlusU, IndependentNormal, IndependentUniform];
    let d = |k: usize| designs[(k - 1) % 3];
    Some(match id {
        1..=3 => sine_table(id, Significance, d(id), 1, 1),
        4..=6 => sine_table(id, ConditionalIndependence, d(id), 1, 1),
        7..=9 => sine_table(id, Significance, d(id), 2, 1),
        10..=12 => sine_table(id, Significance, d(id), 1, 2),
        13..=15 => exp_table(id, Significance, d(id), exp_gamma),
        16..=18 => sine_table(id, ConditionalIndependence, d(id), 2, 1),
        19..=21 => sine_table(id, ConditionalIndependence, d(id), 1, 2),
        22..=24 => exp_table(id, ConditionalIndependence, d(id), exp_gamma),
        _ => return None,
    })
}

/// Parses `table<k>` into a preset.
pub fn preset_by_name(name: &str, exp_gamma: f64) -> Option<TablePreset> {
    let id: usize = name.strip_prefix("table")?.parse().ok()?;
    preset(id, exp_gamma)
}

/// One cell of a rendered table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub design: Design,
    pub test_kind: TestKind,
    pub block: String,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub c: f64,
    pub gamma: f64,
    pub method: Method,
    pub statistic: Statistic,
    pub alpha: f64,
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
}

/// Runs every cell of `preset` with `base` as the template configuration.
/// Each block/column gets its own master seed derived from `master_seed`.
pub fn run_preset(
    preset: &TablePreset,
    base: &TestConfig,
    reps: usize,
    master_seed: u64,
    mut progress: impl FnMut(&str),
) -> Result<Vec<TableCell>> {
    let mut cells = Vec::new();
    let mut cell_index = 0u64;
    for block in &preset.blocks {
        for col in &block.columns {
            let spec = DgpSpec {
                design: preset.design,
                p: block.p,
                q: block.q,
                alternative: preset.alternative,
                gamma: col.gamma,
                response: Response::for_test(preset.test_kind),
                n: col.n,
            };
            let cfg = TestConfig {
                test_kind: preset.test_kind,
                c: col.c,
                order: spec.default_order(),
                ..base.clone()
            };
            let seed = derive_seed(master_seed, StreamRole::Data, 1_000_000 + cell_index);
            cell_index += 1;
            progress(&format!("{} n={} c={} gamma={}", block.label, col.n, col.c, col.gamma));
            let res = run_monte_carlo(&spec, &cfg, reps, seed)?;
            cells.extend(cells_from_result(&res, &block.label));
        }
    }
    Ok(cells)
}

pub fn cells_from_result(res: &SimulationResult, block: &str) -> Vec<TableCell> {
    res.cells
        .iter()
        .map(|c| TableCell {
            design: res.dgp.design,
            test_kind: res.config.test_kind,
            block: block.to_string(),
            p: res.dgp.p,
            q: res.dgp.q,
            n: res.dgp.n,
            c: res.config.c,
            gamma: res.dgp.gamma,
            method: c.method,
            statistic: c.statistic,
            alpha: c.alpha,
            rate: c.rate,
            se: c.se,
            reps: res.reps,
        })
        .collect()
}

pub const CSV_HEADER: &str = "design,test,p,q,method,statistic,n,c,gamma,alpha,rate,se,reps";

/// One CSV row per cell.
pub fn emit_csv(cells: &[TableCell]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in cells {
        let test = match c.test_kind {
            TestKind::Significance => "significance",
            TestKind::ConditionalIndependence => "conditional_independence",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{:.3},{:.4},{}",
            c.design.label(),
            test,
            c.p,
            c.q,
            c.method.label(),
            c.statistic.label(),
            c.n,
            c.c,
            c.gamma,
            c.alpha,
            c.rate,
            c.se,
            c.reps
        );
    }
    out
}

fn push_unique<T: PartialEq + Clone>(v: &mut Vec<T>, x: &T) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

/// Aligned text table: blocks stacked vertically, rows method × α,
/// columns grouped by n and indexed by γ or c. One section per statistic.
fn end_line(out: &mut String) {
    let trimmed = out.trim_end_matches(' ').len();
    out.truncate(trimmed);
    out.push('\n');
}

pub fn emit_table(cells: &[TableCell], axis: ColumnAxis) -> String {
    let mut out = String::new();
    let mut stats: Vec<Statistic> = Vec::new();
    for c in cells {
        push_unique(&mut stats, &c.statistic);
    }
    if stats.is_empty() {
        let _ = write!(out, "{:<8}{}", "", axis.header());
        end_line(&mut out);
        return out;
    }
    let col_key = |c: &TableCell| match axis {
        ColumnAxis::Gamma => c.gamma,
        ColumnAxis::C => c.c,
    };
    for (si, stat) in stats.iter().enumerate() {
        if si > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[{}]", stat.label());
        let sel: Vec<&TableCell> = cells.iter().filter(|c| c.statistic == *stat).collect();
        let mut blocks: Vec<String> = Vec::new();
        for c in &sel {
            push_unique(&mut blocks, &c.block);
        }
        for block in &blocks {
            let bc: Vec<&&TableCell> = sel.iter().filter(|c| &c.block == block).collect();
            let mut ns: Vec<usize> = Vec::new();
            let mut keys: Vec<f64> = Vec::new();
            let mut methods: Vec<Method> = Vec::new();
            let mut alphas: Vec<f64> = Vec::new();
            for c in &bc {
                push_unique(&mut ns, &c.n);
                push_unique(&mut keys, &col_key(c));
                push_unique(&mut methods, &c.method);
                push_unique(&mut alphas, &c.alpha);
            }
            let group_width = 8 * keys.len();
            let _ = write!(out, "{:<8}{:<12}", block, "");
            for n in &ns {
                let _ = write!(out, "{:<w$}", format!("n={n}"), w = group_width);
            }
            end_line(&mut out);
            let _ = write!(out, "{:<8}{:<12}", "", axis.header());
            for _ in &ns {
                for k in &keys {
                    let _ = write!(out, "{:<8}", k);
                }
            }
            end_line(&mut out);
            for m in &methods {
                for (ai, a) in alphas.iter().enumerate() {
                    let label = if ai == 0 { m.label() } else { "" };
                    let _ = write!(out, "{:<8}{:<12}", label, format!("{a:.2}"));
                    for n in &ns {
                        for k in &keys {
                            let cell = bc.iter().find(|c| {
                                c.n == *n && col_key(c) == *k && c.method == *m && c.alpha == *a
                            });
                            match cell {
                                Some(c) => {
                                    let _ = write!(out, "{:<8}", format!("{:.3}", c.rate));
                                }
                                None => {
                                    let _ = write!(out, "{:<8}", "-");
                                }
                            }
                        }
                    }
                    end_line(&mut out);
                }
            }
        }
    }
    out
}
