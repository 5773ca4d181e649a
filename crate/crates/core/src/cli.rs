//! Command-line front end: argument parsing, CSV loading, TOML config
//! merging and report output.
//!
//! Precedence is flags, then the TOML file, then built-in defaults.
//! Exit codes: 0 when the command ran (whatever the decision), 1 when a
//! kernel self-check fails, 2 on I/O or parse errors, 3 on validation errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bootstrap::{run_test, MethodChoice, MultiplierKind, StatisticChoice, TestConfig, TestKind, TestReport};
use crate::error::Error;
use crate::estimators::Dataset;
use crate::kernels::{selfcheck, KernelOrder, KernelSpec, ScaleMode, SelfcheckTolerances, UnivariateKernel};
use crate::matrix::Matrix;
use crate::simulation::{
    cells_from_result, default_order, emit_csv, emit_table, preset_by_name, run_monte_carlo, run_preset,
    Alternative, ColumnAxis, Design, DgpSpec, Response, TableCell, PRESET_COUNT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// An error with the exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::validation(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "projtest", version, about = "Kernel significance and conditional-independence tests")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether Z can be dropped from the regression of Y on (X, Z).
    Test(TestArgs),
    /// Test whether Y is independent of Z given X.
    CiTest(TestArgs),
    /// Run a Monte Carlo study and print rejection-rate tables.
    Simulate(SimArgs),
    /// Check kernel moments, CDFs and self-convolutions against quadrature.
    KernelSelfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pj,
    Dm,
    Both,
}

impl From<MethodArg> for MethodChoice {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pj => MethodChoice::Projected,
            MethodArg::Dm => MethodChoice::Dm,
            MethodArg::Both => MethodChoice::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Cvm,
    Ks,
    Both,
}

impl From<StatArg> for StatisticChoice {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Cvm => StatisticChoice::Cvm,
            StatArg::Ks => StatisticChoice::Ks,
            StatArg::Both => StatisticChoice::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MultiplierArg {
    Mammen,
    Rademacher,
    Normal,
}

impl From<MultiplierArg> for MultiplierKind {
    fn from(m: MultiplierArg) -> Self {
        match m {
            MultiplierArg::Mammen => MultiplierKind::MammenTwoPoint,
            MultiplierArg::Rademacher => MultiplierKind::Rademacher,
            MultiplierArg::Normal => MultiplierKind::StandardNormal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    None,
    Std,
}

/// Test settings shared by every command. Unset flags fall back to the
/// TOML file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Bootstrap method [default: both].
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Test statistic [default: both].
    #[arg(long, value_enum)]
    pub stat: Option<StatArg>,
    /// Kernel order, 2 or 4 [default: 2 when p = q = 1, else 4].
    #[arg(long, value_parser = ["2", "4"])]
    pub order: Option<String>,
    /// Bandwidth coefficient c in h = c·n^(-1/3) or c·n^(-1/6) [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Bootstrap replicates [default: 199].
    #[arg(long = "B")]
    pub bootstrap_reps: Option<usize>,
    /// Comma-separated significance levels [default: 0.10,0.05,0.01].
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Multiplier law [default: mammen].
    #[arg(long, value_enum)]
    pub multiplier: Option<MultiplierArg>,
    /// Seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bandwidth scaling: none, or per-coordinate sample standard deviation [default: none].
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record wall-clock time and a timestamp (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    /// Input CSV with a header row.
    pub csv: PathBuf,
    /// Response column.
    #[arg(long)]
    pub y: Option<String>,
    /// Comma-separated covariates kept under the null.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
    /// Comma-separated covariates under test.
    #[arg(long, value_delimiter = ',')]
    pub z: Option<Vec<String>>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep at most this many bootstrap draws per statistic in the report.
    #[arg(long)]
    pub draws_cap: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Significance,
    Ci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    XEqZPlusU,
    IndependentNormal,
    IndependentUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlternativeArg {
    Sine,
    Exp,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Named grid, `table1` to `table24`.
    #[arg(long)]
    pub preset: Option<String>,
    /// Monte Carlo replications per cell [default: 1000].
    #[arg(long)]
    pub reps: Option<usize>,
    /// γ for the exponential-alternative presets [default: 1].
    #[arg(long)]
    pub exp_gamma: Option<f64>,
    /// Single-cell design when no preset is given.
    #[arg(long, value_enum)]
    pub design: Option<DesignArg>,
    #[arg(long, value_enum)]
    pub alternative: Option<AlternativeArg>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Output format [default: text].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelfcheckArgs {
    /// Override every self-check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Column roles for the test commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub y: String,
    pub x: Vec<String>,
    pub z: Vec<String>,
}

impl ColumnRoles {
    pub fn validate(&self) -> CliResult<()> {
        if self.x.is_empty() || self.z.is_empty() {
            return Err(CliError::validation("x and z need at least one column each"));
        }
        let mut all: Vec<&String> = std::iter::once(&self.y).chain(&self.x).chain(&self.z).collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::validation(format!("column `{}` is assigned more than one role", w[0])));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolesFile {
    pub y: Option<String>,
    pub x: Option<Vec<String>>,
    pub z: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationFile {
    pub preset: Option<String>,
    pub reps: Option<usize>,
    pub exp_gamma: Option<f64>,
    pub design: Option<Design>,
    pub alternative: Option<Alternative>,
    pub gamma: Option<f64>,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub format: Option<String>,
}

/// Layout of the TOML configuration file:
///
/// ```toml
/// [test]          # any TestConfig field
/// c = 0.5
/// [columns]
/// y = "y"
/// x = ["x1"]
/// z = ["z1", "z2"]
/// [simulation]
/// preset = "table1"
/// reps = 200
/// ```
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pub test: TestConfig,
    /// Whether the file set the kernel order explicitly.
    pub order_set: bool,
    pub columns: RolesFile,
    pub simulation: SimulationFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    test: Option<toml::Table>,
    #[serde(default)]
    columns: RolesFile,
    #[serde(default)]
    simulation: SimulationFile,
}

pub fn parse_config(text: &str) -> CliResult<FileConfig> {
    let raw: RawFile = toml::from_str(text).map_err(|e| CliError::io(format!("config: {e}")))?;
    let table = raw.test.unwrap_or_default();
    let order_set = table.contains_key("order");
    let test: TestConfig = table
        .try_into()
        .map_err(|e| CliError::io(format!("config [test]: {e}")))?;
    Ok(FileConfig {
        test,
        order_set,
        columns: raw.columns,
        simulation: raw.simulation,
    })
}

pub fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}

/// Applies flags on top of the file configuration. Returns the merged
/// config and whether the kernel order was chosen explicitly.
pub fn merge_config(file: &FileConfig, flags: &CommonArgs) -> (TestConfig, bool) {
    let mut cfg = file.test.clone();
    let mut order_set = file.order_set;
    if let Some(m) = flags.method {
        cfg.method = m.into();
    }
    if let Some(s) = flags.stat {
        cfg.statistic = s.into();
    }
    if let Some(o) = &flags.order {
        cfg.order = if o == "4" { KernelOrder::Fourth } else { KernelOrder::Second };
        order_set = true;
    }
    if let Some(c) = flags.c {
        cfg.c = c;
    }
    if let Some(b) = flags.bootstrap_reps {
        cfg.bootstrap_reps = b;
    }
    if let Some(a) = &flags.alpha {
        cfg.alphas = a.clone();
    }
    if let Some(m) = flags.multiplier {
        cfg.multiplier = m.into();
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(s) = flags.scale {
        cfg.scale_mode = match s {
            ScaleArg::None => ScaleMode::None,
            ScaleArg::Std => ScaleMode::PerCoordinateStd,
        };
    }
    if flags.timing {
        cfg.record_timing = true;
    }
    (cfg, order_set)
}

/// Parsed CSV plus the digest of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub data: Dataset,
    pub digest: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Reads the role columns of a CSV. Rows are numbered from 1, excluding
/// the header.
pub fn read_csv(bytes: &[u8], roles: &ColumnRoles) -> CliResult<Dataset> {
    roles.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::io(format!("CSV header: {e}")))?
        .clone();
    let index = |name: &String| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("column `{name}` not found in CSV header")))
    };
    let yi = index(&roles.y)?;
    let xi: Vec<usize> = roles.x.iter().map(index).collect::<CliResult<_>>()?;
    let zi: Vec<usize> = roles.z.iter().map(index).collect::<CliResult<_>>()?;

    let mut y = Vec::new();
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| CliError::io(format!("CSV row {row}: {e}")))?;
        let field = |col: usize| -> CliResult<f64> {
            let name = &headers[col];
            let raw = rec.get(col).unwrap_or("");
            if raw.is_empty() {
                return Err(CliError::validation(format!("missing value in column `{name}` at row {row}")));
            }
            let v: f64 = raw
                .parse()
                .map_err(|_| CliError::io(format!("cannot parse `{raw}` in column `{name}` at row {row}")))?;
            if !v.is_finite() {
                return Err(CliError::validation(format!("non-finite value in column `{name}` at row {row}")));
            }
            Ok(v)
        };
        y.push(field(yi)?);
        for &c in &xi {
            xs.push(field(c)?);
        }
        for &c in &zi {
            zs.push(field(c)?);
        }
    }
    let n = y.len();
    let x = Matrix::from_vec(n, xi.len(), xs);
    let z = Matrix::from_vec(n, zi.len(), zs);
    Ok(Dataset::new(y, x, z)?)
}

/// Provenance recorded next to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input_digest: String,
    pub columns: ColumnRoles,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_unix_secs: Option<u64>,
}

/// The JSON document written by `test` and `ci-test`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliReport {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub report: TestReport,
}

pub fn emit_json(report: &CliReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> serde_json::Result<CliReport> {
    serde_json::from_str(text)
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("stdout: {e}"))),
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_test(args: &TestArgs, kind: TestKind, stdout: &mut dyn Write) -> CliResult<()> {
    let file = load_config(args.common.config.as_deref())?;
    let (mut cfg, order_set) = merge_config(&file, &args.common);
    cfg.test_kind = kind;
    if let Some(cap) = args.draws_cap {
        cfg.draws_cap = Some(cap);
    }
    let missing = |what: &str| CliError::validation(format!("--{what} is required (flag or [columns] in config)"));
    let roles = ColumnRoles {
        y: args.y.clone().or(file.columns.y.clone()).ok_or_else(|| missing("y"))?,
        x: args.x.clone().or(file.columns.x.clone()).ok_or_else(|| missing("x"))?,
        z: args.z.clone().or(file.columns.z.clone()).ok_or_else(|| missing("z"))?,
    };
    let bytes = fs::read(&args.csv).map_err(|e| CliError::io(format!("{}: {e}", args.csv.display())))?;
    let data = read_csv(&bytes, &roles)?;
    if !order_set {
        cfg.order = default_order(data.p(), data.q());
    }
    let report = run_test(&data, &cfg)?;
    let doc = CliReport {
        schema_version: crate::bootstrap::SCHEMA_VERSION,
        manifest: RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: match kind {
                TestKind::Significance => "test".into(),
                TestKind::ConditionalIndependence => "ci-test".into(),
            },
            input_digest: format!("sha256:{}", sha256_hex(&bytes)),
            columns: roles,
            seed: cfg.seed,
            started_unix_secs: cfg.record_timing.then(unix_now),
        },
        report,
    };
    write_output(args.out.as_deref(), &emit_json(&doc), stdout)
}

pub fn cmd_simulate(args: &SimArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let file = load_config(args.common.config.as_deref())?;
    let (base, order_set) = merge_config(&file, &args.common);
    let sim = &file.simulation;
    let reps = args.reps.or(sim.reps).unwrap_or(1000);
    let master_seed = base.seed;
    let exp_gamma = args.exp_gamma.or(sim.exp_gamma).unwrap_or(1.0);
    let format = match (args.format, sim.format.as_deref()) {
        (Some(f), _) => f,
        (None, Some("csv")) => FormatArg::Csv,
        (None, Some("text") | None) => FormatArg::Text,
        (None, Some(other)) => return Err(CliError::validation(format!("unknown format `{other}`"))),
    };

    let preset_name = args.preset.clone().or(sim.preset.clone());
    let (cells, axis, title): (Vec<TableCell>, ColumnAxis, String) = if let Some(name) = preset_name {
        let preset = preset_by_name(&name, exp_gamma).ok_or_else(|| {
            CliError::validation(format!("unknown preset `{name}`; expected table1 to table{PRESET_COUNT}"))
        })?;
        let cells = run_preset(&preset, &base, reps, master_seed, |msg| log::info!("{msg}"))?;
        (cells, preset.axis, format!("Table {}: {}", preset.id, preset.title))
    } else {
        let kind = match args.kind {
            Some(KindArg::Ci) => TestKind::ConditionalIndependence,
            Some(KindArg::Significance) => TestKind::Significance,
            None => base.test_kind,
        };
        let design = match args.design {
            Some(DesignArg::XEqZPlusU) => Design::XEqZPlusU,
            Some(DesignArg::IndependentNormal) => Design::IndependentNormal,
            Some(DesignArg::IndependentUniform) => Design::IndependentUniform,
            None => sim.design.unwrap_or(Design::XEqZPlusU),
        };
        let alternative = match args.alternative {
            Some(AlternativeArg::Sine) => Alternative::Sine,
            Some(AlternativeArg::Exp) => Alternative::Exp,
            None => sim.alternative.unwrap_or(Alternative::Sine),
        };
        let spec = DgpSpec {
            design,
            p: args.p.or(sim.p).unwrap_or(1),
            q: args.q.or(sim.q).unwrap_or(1),
            alternative,
            gamma: args.gamma.or(sim.gamma).unwrap_or(0.0),
            response: Response::for_test(kind),
            n: args.n.or(sim.n).unwrap_or(200),
        };
        let mut cfg = TestConfig {
            test_kind: kind,
            ..base.clone()
        };
        if !order_set {
            cfg.order = spec.default_order();
        }
        let res = run_monte_carlo(&spec, &cfg, reps, master_seed)?;
        let label = format!("c={}", cfg.c);
        (
            cells_from_result(&res, &label),
            ColumnAxis::Gamma,
            format!("{} design, p={}, q={}", design.label(), spec.p, spec.q),
        )
    };
    let text = match format {
        FormatArg::Csv => emit_csv(&cells),
        FormatArg::Text => format!("{title}\n{}", emit_table(&cells, axis)),
    };
    write_output(args.out.as_deref(), &text, stdout)
}

/// Runs the self-checks on `kernels` and writes one line per check.
/// Returns [`EXIT_OK`] iff every check passes.
pub fn run_selfcheck(kernels: &[(&str, &dyn UnivariateKernel)], tol: SelfcheckTolerances, out: &mut dyn Write) -> i32 {
    let mut failed = 0;
    for (label, k) in kernels {
        for c in selfcheck(*k, label, tol) {
            let status = if c.passed { "ok  " } else { "FAIL" };
            let _ = writeln!(
                out,
                "{status} {:<40} max_error={:.3e} tolerance={:.1e}",
                c.name, c.max_error, c.tolerance
            );
            failed += usize::from(!c.passed);
        }
    }
    if failed == 0 {
        EXIT_OK
    } else {
        let _ = writeln!(out, "{failed} check(s) failed");
        EXIT_CHECK_FAILED
    }
}

pub fn cmd_kernel_selfcheck(args: &SelfcheckArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let tol = match args.tol {
        Some(t) if t > 0.0 => SelfcheckTolerances::uniform(t),
        Some(t) => return Err(CliError::validation(format!("tolerance must be positive, got {t}"))),
        None => SelfcheckTolerances::default(),
    };
    let k2 = KernelSpec::second();
    let k4 = KernelSpec::fourth();
    Ok(run_selfcheck(&[("order 2", &k2), ("order 4", &k4)], tol, stdout))
}

/// Dispatches a parsed command line and returns the process exit code.
/// Errors are written to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut buf: Vec<u8> = Vec::new();
    let out = &mut buf;
    let mut body = move || -> CliResult<i32> {
        match &cli.command {
            Command::Test(a) => cmd_test(a, TestKind::Significance, out).map(|_| EXIT_OK),
            Command::CiTest(a) => cmd_test(a, TestKind::ConditionalIndependence, out).map(|_| EXIT_OK),
            Command::Simulate(a) => cmd_simulate(a, out).map(|_| EXIT_OK),
            Command::KernelSelfcheck(a) => cmd_kernel_selfcheck(a, out),
        }
    };
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(body),
            Err(e) => Err(CliError::validation(format!("--threads: {e}"))),
        },
        None => body(),
    };
    let _ = stdout.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

/// Parses `args` and runs. Usage errors exit with [`EXIT_VALIDATION`];
/// `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            code
        }
    }
}
