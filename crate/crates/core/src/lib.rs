//! Diagnostics for nested sampling runs.
//!
//! A run is a list of dead points with birth contours ([`NsRun`]). From it
//! this crate derives live-point counts and threads, estimates evidence
//! and posterior quantities, bootstraps over threads, and separates the
//! error due to imperfect constrained sampling (`sigma_imp`) from the
//! algorithm's intrinsic stochasticity. Two-sample KS tests between runs,
//! data for uncertainty-band and log X diagrams, and two built-in samplers
//! (an exact one for the spherical Gaussian and a slice sampler with a
//! `num_repeats` knob) complete the toolkit.
//!
//! ```
//! use nsdiag::{perfect_ns_gaussian, error_budget, EstimatorSpec, SamplerSettings};
//!
//! let runs: Vec<_> = (0..4)
//!     .map(|seed| perfect_ns_gaussian(2, &SamplerSettings::new(50, seed)).unwrap())
//!     .collect();
//! let budget = error_budget(&runs, &EstimatorSpec::LogEvidence, 20, 1, None).unwrap();
//! assert!(budget.sigma_bs.value > 0.0);
//! ```

// Negated float comparisons such as `!(x > 0.0)` are used on purpose so
// that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod io;
pub mod plotdata;
pub mod resampling;
pub mod rng;
pub mod run;
pub mod sampler;

pub use diagnostics::{
    bootstrap_distance, error_budget, error_budgets, holm_bonferroni, imp_fraction, ks_pvalue,
    ks_statistic, pairwise_tests, sigma_combined, sigma_imp, sigma_imp_rmse, thread_ks_test,
    DiagnosticReport, ErrorBudget, Measured, PairTestResult, PairwiseReport,
};
pub use error::{Error, Result, Violation, ViolationKind};
pub use estimators::{estimate, importance_weights, log_evidence, EstimatorSpec, ParamFunction};
pub use io::{parse_dead_birth, read_native, write_dead_birth, write_native};
pub use plotdata::{
    logx_diagram, posterior_mass_curve, posterior_uncertainty_band, thread_trace, ContourBand,
    LogXDiagram, MassCurve,
};
pub use resampling::{bootstrap_run, bootstrap_std, bootstrap_values, weighted_kde, BootstrapSample, DensityCurve};
pub use run::{
    combine_runs, decompose_threads, live_point_counts, logx_expected, simulate_logx, validate_run,
    Meta, NsRun, SamplePoint, Thread,
};
pub use sampler::{
    generate_runs, perfect_ns_gaussian, slice_ns, true_logz, LikelihoodSpec, PriorSpec, SamplerKind,
    SamplerSettings,
};
