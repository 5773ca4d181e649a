//! Kernel-based specification tests with a projected multiplier bootstrap.
//!
//! The library tests whether a set of covariates `Z` can be dropped from a
//! regression of `Y` on `(X, Z)`, and whether `Y` is independent of `Z`
//! given `X`. Both tests compare a direct bootstrap with one that projects
//! the summands onto the orthogonal complement of the nuisance tangent
//! space, so the multiplier bootstrap stays valid without a density bound.
//!
//! Typical use:
//!
//! ```no_run
//! use projtest::{run_test, Dataset, TestConfig};
//! let data = Dataset::from_columns(vec![1.0, 2.0, 0.5], vec![0.0, 0.3, 1.0], vec![0.1, 0.2, 0.7]).unwrap();
//! let report = run_test(&data, &TestConfig::default()).unwrap();
//! println!("{}", report.results[0].p_value);
//! ```

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod matrix;
pub mod projection;
pub mod quadrature;
pub mod seeds;
pub mod simulation;
pub mod statistics;

pub use bootstrap::{
    run_test, run_test_on_core, Method, MethodChoice, MultiplierKind, Statistic, StatisticChoice, TestConfig,
    TestKind, TestReport, SCHEMA_VERSION,
};
pub use error::{Error, Result};
pub use estimators::{build_core, Dataset, Guards, PrecomputedCore};
pub use kernels::{bandwidth_rule, BandwidthPlan, KernelOrder, KernelSpec, ScaleMode};
pub use matrix::Matrix;
