//! Property checks run both by the per-module tests and by the acceptance
//! target. Each returns the worst observed error against its tolerance.

use super::*;
use projtest::bootstrap::{
    bootstrap_process, decide, run_test, Method, MethodChoice, StatisticChoice, TestConfig, TestKind,
};
use projtest::projection::{orthogonality_defect, QuadratureBudget};
use projtest::simulation::{generate, run_monte_carlo, Alternative, Design, DgpSpec, Response};
use projtest::statistics::{ci_process, ci_residual_matrix, projected_process, ProcessKind};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            error,
            tolerance,
        }
    }

    /// Exact checks carry error 0 on success and 1 on failure.
    pub fn exact(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error <= self.tolerance
    }

    pub fn assert(&self) {
        assert!(self.passed(), "{}: error {:e} exceeds {:e}", self.name, self.error, self.tolerance);
    }
}

const ORDERS: [KernelOrder; 2] = [KernelOrder::Second, KernelOrder::Fourth];

/// `∫ u^i k(u) du = δ_{i0}` for `i < l`, checked on the library kernel.
pub fn kernel_moments() -> Check {
    let mut err: f64 = 0.0;
    for order in ORDERS {
        let spec = KernelSpec::new(order);
        for i in 0..order.as_u32() {
            let m = integrate(
                |u| u.powi(i as i32) * projtest::kernels::epanechnikov(u, spec),
                &[-1.0, 0.0, 1.0],
            );
            let target = if i == 0 { 1.0 } else { 0.0 };
            err = err.max((m - target).abs());
        }
        // the reference polynomial must agree with the library kernel
        for k in 0..=200 {
            let u = -1.1 + 0.011 * k as f64;
            err = err.max((projtest::kernels::epanechnikov(u, spec) - kref(u, order)).abs());
        }
    }
    Check::new("kernel moment conditions", err, 1e-10)
}

/// Closed-form CDF and self-convolution against quadrature.
pub fn kernel_cdf_selfconv() -> Check {
    let mut err: f64 = 0.0;
    for order in ORDERS {
        let spec = KernelSpec::new(order);
        for k in 0..=60 {
            let u = -1.5 + 0.05 * k as f64;
            err = err.max((projtest::kernels::kernel_cdf(u, spec) - cdf_ref(u, order)).abs());
        }
        for k in 0..=40 {
            let v = -2.0 + 0.1 * k as f64;
            err = err.max((projtest::kernels::kernel_selfconv(v, spec) - selfconv_ref(v, order)).abs());
        }
        err = err.max(projtest::kernels::kernel_selfconv(2.5, spec).abs());
    }
    Check::new("kernel cdf and self-convolution vs quadrature", err, 1e-8)
}

/// Instances used by the closed-form and orthogonality checks.
pub fn closed_form_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = 100;
    for (q, p, order) in shapes() {
        for n in [6, 15] {
            out.push(random_instance(seed, n, q, p, order));
            seed += 1;
        }
    }
    out
}

/// Ĝ_n and Δ̂_n against direct quadrature of `f̂_W`.
pub fn closed_forms() -> Check {
    let mut err: f64 = 0.0;
    for inst in closed_form_instances() {
        let core = inst.core();
        let oracle = Oracle::new(&inst);
        for i in 0..inst.n() {
            err = err.max((core.delta[i] - oracle.delta_quad(i)).abs());
            for j in 0..inst.n() {
                err = err.max((core.gmat.get(i, j) - oracle.g_quad(i, &inst.z[j])).abs());
            }
        }
    }
    Check::new("G and Delta closed forms vs quadrature (n <= 15)", err, 1e-8)
}

/// Empirical orthogonality defect over every non-degenerate `(i, j)`;
/// returns the p=1 and p=2 checks.
pub fn orthogonality() -> (Check, Check) {
    let mut err = [0.0f64; 2];
    for inst in closed_form_instances().into_iter().filter(|i| i.n() <= 6 || i.p() == 1) {
        let core = inst.core();
        let slot = inst.p() - 1;
        for i in 0..inst.n() {
            if core.delta[i] < core.guards.delta_floor {
                continue;
            }
            for j in 0..inst.n() {
                let d = orthogonality_defect(&core, i, j, QuadratureBudget::default()).unwrap();
                err[slot] = err[slot].max(d.abs());
            }
        }
    }
    (
        Check::new("projection orthogonality defect (p = 1)", err[0], 1e-8),
        Check::new("projection orthogonality defect (p = 2)", err[1], 1e-7),
    )
}

/// Matrix-factored R̂_n, Î_n and R̂*_n against the expanded sums.
pub fn brute_force_processes() -> Check {
    let mut err: f64 = 0.0;
    let mut seed = 500;
    for (q, p, order) in shapes() {
        for n in [4, 12] {
            let inst = random_instance(seed, n, q, p, order);
            seed += 1;
            let core = inst.core();
            let oracle = Oracle::new(&inst);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();

            err = err.max(max_abs_diff(&projected_process(&core).values, &oracle.projected(None)));
            let resid = ci_residual_matrix(&core, &core.y);
            err = err.max(max_abs_diff(&ci_process(&core, &resid).values, &oracle.ci(None)));
            let boot = bootstrap_process(&core, &v, ProcessKind::Projected);
            err = err.max(max_abs_diff(&boot.values, &oracle.projected(Some(&v))));
            let boot_ci = bootstrap_process(&core, &v, ProcessKind::ProjectedCi);
            err = err.max(max_abs_diff(&boot_ci.values, &oracle.ci(Some(&v))));
        }
    }
    Check::new("brute-force triple sums for R, I and R* (n <= 12)", err, 1e-10)
}

fn sample(n: usize, test_kind: TestKind, seed: u64) -> Dataset {
    let spec = DgpSpec {
        design: Design::XEqZPlusU,
        p: 1,
        q: 1,
        alternative: Alternative::Sine,
        gamma: 0.0,
        response: Response::for_test(test_kind),
        n,
    };
    generate(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn both(test_kind: TestKind, seed: u64, b: usize) -> TestConfig {
    TestConfig {
        test_kind,
        method: MethodChoice::Both,
        statistic: StatisticChoice::Both,
        bootstrap_reps: b,
        seed,
        ..TestConfig::default()
    }
}

/// With every multiplier equal to one the bootstrap statistic is the
/// observed statistic, bit for bit.
pub fn unit_multiplier_identity() -> Check {
    let mut ok = true;
    for kind in [TestKind::Significance, TestKind::ConditionalIndependence] {
        let data = sample(40, kind, 3);
        let cfg = both(kind, 1, 1);
        let core = build_core(
            &data,
            &projtest::bootstrap::plan_for(&data, &cfg).unwrap(),
            cfg.kernel(),
            cfg.guards(),
        );
        let pk = Method::Projected.process_kind(kind);
        let observed = match kind {
            TestKind::Significance => projected_process(&core),
            TestKind::ConditionalIndependence => ci_process(&core, &ci_residual_matrix(&core, &core.y)),
        };
        let boot = bootstrap_process(&core, &vec![1.0; data.n()], pk);
        ok &= observed.values == boot.values;
    }
    Check::exact("unit-multiplier bootstrap identity (exact)", ok)
}

/// Rescaling observed and bootstrap statistics by a positive constant
/// leaves every flag and p-value unchanged.
pub fn scale_invariance() -> Check {
    let mut ok = true;
    for kind in [TestKind::Significance, TestKind::ConditionalIndependence] {
        let data = sample(60, kind, 11);
        let report = run_test(&data, &both(kind, 5, 199)).unwrap();
        for r in &report.results {
            for c in [1e-6, 0.37, 2.0, 3.0, 1e4] {
                let draws: Vec<f64> = r.draws.iter().map(|d| d * c).collect();
                let scaled = decide(r.method, r.statistic, r.observed * c, draws, &report.config.alphas, None);
                ok &= scaled.p_value == r.p_value;
                ok &= scaled.levels.iter().zip(&r.levels).all(|(a, b)| a.reject == b.reject);
            }
        }
    }
    Check::exact("decision scale invariance (exact)", ok)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

/// Reports and Monte Carlo results serialize identically under
/// different worker counts.
pub fn thread_determinism() -> Check {
    let mut ok = true;
    for kind in [TestKind::Significance, TestKind::ConditionalIndependence] {
        let data = sample(50, kind, 21);
        let cfg = both(kind, 9, 49);
        let runs: Vec<String> = [1, 2, 4]
            .into_iter()
            .map(|t| in_pool(t, || serde_json::to_string(&run_test(&data, &cfg).unwrap()).unwrap()))
            .collect();
        ok &= runs.windows(2).all(|w| w[0] == w[1]);

        let spec = DgpSpec {
            design: Design::IndependentUniform,
            p: 1,
            q: 1,
            alternative: Alternative::Sine,
            gamma: 1.0,
            response: Response::for_test(kind),
            n: 30,
        };
        let cfg = both(kind, 0, 19);
        let sims: Vec<String> = [1, 3]
            .into_iter()
            .map(|t| in_pool(t, || serde_json::to_string(&run_monte_carlo(&spec, &cfg, 12, 77).unwrap()).unwrap()))
            .collect();
        ok &= sims[0] == sims[1];
    }
    Check::exact("determinism across thread counts (byte-exact)", ok)
}

/// Every criterion-level property in a fixed order.
pub fn suite() -> Vec<Check> {
    let (o1, o2) = orthogonality();
    vec![
        kernel_moments(),
        kernel_cdf_selfconv(),
        closed_forms(),
        o1,
        o2,
        brute_force_processes(),
        unit_multiplier_identity(),
        scale_invariance(),
        thread_determinism(),
    ]
}

