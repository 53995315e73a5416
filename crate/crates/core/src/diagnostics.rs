//! Implementation-error estimates, two-sample KS tests and report assembly.
//!
//! Given several runs, the spread of their results (`sigma_values`) is
//! compared with the spread expected from the algorithm's own randomness
//! (`sigma_bs`, from bootstrap resampling of threads). Whatever variance is
//! left over is attributed to imperfect constrained sampling (`sigma_imp`).
//! With only two runs, the thread KS test and the KS distance between
//! bootstrap distributions check consistency instead.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate, estimate_parts, spec_values, EstimatorSpec};
use crate::resampling::{bootstrap_values, bootstrap_values_multi, sample_std, BootstrapSample};
use crate::run::{logx_expected, logx_from_nlive, NsRun};
use crate::rng::{derive_seed, substream};

/// Replications used for the uncertainty on each budget entry.
pub const BUDGET_UNCERTAINTY_REPLICATIONS: usize = 1000;

/// A value with its 1-sigma numerical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub unc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub estimator: EstimatorSpec,
    pub n_runs: usize,
    pub true_value: Option<f64>,
    pub mean: Measured,
    pub sigma_values: Measured,
    pub sigma_bs: Measured,
    pub sigma_imp: Measured,
    pub imp_fraction: Measured,
    pub rmse: Option<Measured>,
    pub sigma_imp_rmse: Option<Measured>,
    pub imp_rmse_fraction: Option<Measured>,
    /// Estimate from each run.
    pub run_values: Vec<f64>,
    /// Bootstrap standard deviation of each run.
    pub run_bs_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTestResult {
    pub ks_statistic: f64,
    /// Present for thread tests only.
    pub p_value: Option<f64>,
    pub estimator: EstimatorSpec,
    pub runs: (usize, usize),
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and nonnegative, got {x}")))
    }
}

/// `sqrt(sigma_values^2 - sigma_bs^2)` when positive, else 0.
pub fn sigma_imp(sigma_values: f64, sigma_bs: f64) -> Result<f64> {
    check_nonneg("sigma_values", sigma_values)?;
    check_nonneg("sigma_bs", sigma_bs)?;
    Ok(excess(sigma_values, sigma_bs))
}

fn excess(total: f64, part: f64) -> f64 {
    if total > part {
        ((total - part) * (total + part)).sqrt()
    } else {
        0.0
    }
}

/// Fraction of the observed spread attributed to implementation effects.
pub fn imp_fraction(sigma_values: f64, sigma_bs: f64) -> Result<f64> {
    if !(sigma_values > 0.0) {
        return Err(Error::InvalidArgument("sigma_values must be positive".into()));
    }
    Ok((sigma_imp(sigma_values, sigma_bs)? / sigma_values).clamp(0.0, 1.0))
}

/// Like [`sigma_imp`] but using the RMSE against a known true value.
pub fn sigma_imp_rmse(rmse: f64, sigma_bs: f64) -> Result<f64> {
    check_nonneg("rmse", rmse)?;
    check_nonneg("sigma_bs", sigma_bs)?;
    Ok(excess(rmse, sigma_bs))
}

/// Rough error on the combination of `n_runs` runs.
pub fn sigma_combined(sigma_values: f64, n_runs: usize) -> Result<f64> {
    if n_runs < 1 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    Ok(sigma_values / (n_runs as f64).sqrt())
}

/// Two-sample KS statistic: the largest gap between the right-continuous
/// empirical CDFs, evaluated exactly at every pooled sample value.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS statistic needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("KS statistic input contains NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample p-value `2 exp(-2 n1 n2 D^2 / (n1 + n2))`,
/// clamped to 1.
pub fn ks_pvalue(d: f64, n1: usize, n2: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidArgument(format!("KS statistic {d} outside [0, 1]")));
    }
    if n1 < 1 || n2 < 1 {
        return Err(Error::InvalidArgument("sample sizes must be positive".into()));
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    Ok((2.0 * (-2.0 * n1 * n2 / (n1 + n2) * d * d).exp()).min(1.0))
}

/// One-sample KS test of `values` against uniform on [0, 1], returning
/// `(D, p)` with the Kolmogorov limiting distribution (Stephens' small
/// sample correction).
pub fn ks_uniform_test(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no values".into()));
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Estimates of `spec` from each thread of `run`, each thread treated as a
/// single-live-point run.
pub fn thread_values(run: &NsRun, spec: &EstimatorSpec) -> Result<Vec<f64>> {
    if run.thread_labels().len() != run.len() {
        return Err(Error::InvalidRun("thread labels do not cover the points".into()));
    }
    let fvals = spec_values(run, spec)?;
    let loglikes = run.loglikes();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); run.n_threads()];
    for (i, &t) in run.thread_labels().iter().enumerate() {
        groups[t].push(i);
    }
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let ll: Vec<f64> = g.iter().map(|&i| loglikes[i]).collect();
            let f: Vec<f64> = if fvals.is_empty() {
                Vec::new()
            } else {
                g.iter().map(|&i| fvals[i]).collect()
            };
            estimate_parts(&ll, &f, &logx_from_nlive(&vec![1; g.len()]), spec)
        })
        .collect()
}

/// KS test between the per-thread estimates of two runs.
pub fn thread_ks_test(run1: &NsRun, run2: &NsRun, spec: &EstimatorSpec) -> Result<PairTestResult> {
    let a = thread_values(run1, spec)?;
    let b = thread_values(run2, spec)?;
    for n in [a.len(), b.len()] {
        if n < 2 {
            return Err(Error::TooFewThreads { needed: 2, found: n });
        }
    }
    thread_test_from_values(&a, &b, spec, (0, 1))
}

fn thread_test_from_values(
    a: &[f64],
    b: &[f64],
    spec: &EstimatorSpec,
    runs: (usize, usize),
) -> Result<PairTestResult> {
    let d = ks_statistic(a, b)?;
    Ok(PairTestResult {
        ks_statistic: d,
        p_value: Some(ks_pvalue(d, a.len(), b.len())?),
        estimator: spec.clone(),
        runs,
    })
}

/// KS distance between the bootstrap distributions of two runs' estimates.
/// Both runs are resampled with the same seed.
pub fn bootstrap_distance(
    run1: &NsRun,
    run2: &NsRun,
    spec: &EstimatorSpec,
    n_boot: usize,
    seed: u64,
) -> Result<PairTestResult> {
    if n_boot < 2 {
        return Err(Error::InvalidArgument("need at least 2 bootstrap replications".into()));
    }
    let a = bootstrap_values(run1, spec, n_boot, seed)?;
    let b = bootstrap_values(run2, spec, n_boot, seed)?;
    distance_from_samples(&a, &b, (0, 1))
}

fn distance_from_samples(
    a: &BootstrapSample,
    b: &BootstrapSample,
    runs: (usize, usize),
) -> Result<PairTestResult> {
    Ok(PairTestResult {
        ks_statistic: ks_statistic(&a.values, &b.values)?,
        p_value: None,
        estimator: a.estimator.clone(),
        runs,
    })
}

/// Holm–Bonferroni step-down procedure; `true` marks a rejected hypothesis.
pub fn holm_bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("p-values must lie in [0, 1]".into()));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (k, &i) in order.iter().enumerate() {
        if p_values[i] <= alpha / (m - k) as f64 {
            reject[i] = true;
        } else {
            break;
        }
    }
    Ok(reject)
}

struct BudgetParts {
    values: Vec<f64>,
    bs: Vec<f64>,
}

fn budget_stats(values: &[f64], bs: &[f64], truth: Option<f64>) -> [f64; 7] {
    let n = values.len() as f64;
    let sv = sample_std(values).unwrap_or(0.0);
    let sb = bs.iter().sum::<f64>() / n;
    let si = excess(sv, sb);
    let frac = if sv > 0.0 { (si / sv).clamp(0.0, 1.0) } else { 0.0 };
    let (rmse, sir, rfrac) = match truth {
        Some(t) => {
            let rmse = (values.iter().map(|v| (v - t).powi(2)).sum::<f64>() / n).sqrt();
            let sir = excess(rmse, sb);
            let rfrac = if rmse > 0.0 { (sir / rmse).clamp(0.0, 1.0) } else { 0.0 };
            (rmse, sir, rfrac)
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    [sv, sb, si, frac, rmse, sir, rfrac]
}

fn assemble_budget(
    spec: &EstimatorSpec,
    parts: BudgetParts,
    truth: Option<f64>,
    seed: u64,
) -> ErrorBudget {
    let n = parts.values.len();
    let point = budget_stats(&parts.values, &parts.bs, truth);
    // uncertainty on each entry: resample the set of runs with replacement
    let mut rng = substream(seed, u64::MAX - 1);
    let mut reps: Vec<[f64; 7]> = Vec::with_capacity(BUDGET_UNCERTAINTY_REPLICATIONS);
    let mut v = vec![0.0; n];
    let mut b = vec![0.0; n];
    for _ in 0..BUDGET_UNCERTAINTY_REPLICATIONS {
        for k in 0..n {
            let j = rng.random_range(0..n);
            v[k] = parts.values[j];
            b[k] = parts.bs[j];
        }
        reps.push(budget_stats(&v, &b, truth));
    }
    let unc = |idx: usize| {
        let col: Vec<f64> = reps.iter().map(|r| r[idx]).collect();
        sample_std(&col).unwrap_or(0.0)
    };
    let m = |idx: usize| Measured {
        value: point[idx],
        unc: unc(idx),
    };
    let mean = parts.values.iter().sum::<f64>() / n as f64;
    ErrorBudget {
        estimator: spec.clone(),
        n_runs: n,
        true_value: truth,
        mean: Measured {
            value: mean,
            unc: point[0] / (n as f64).sqrt(),
        },
        sigma_values: m(0),
        sigma_bs: m(1),
        sigma_imp: m(2),
        imp_fraction: m(3),
        rmse: truth.map(|_| m(4)),
        sigma_imp_rmse: truth.map(|_| m(5)),
        imp_rmse_fraction: truth.map(|_| m(6)),
        run_values: parts.values,
        run_bs_std: parts.bs,
    }
}

/// Error budgets for several estimators over a set of runs.
///
/// Run `r` is bootstrapped with seed `derive_seed(seed, r)`; all
/// estimators share those replications. `true_values[i]` (if given)
/// enables the RMSE entries for `specs[i]`.
pub fn error_budgets(
    runs: &[NsRun],
    specs: &[EstimatorSpec],
    n_boot: usize,
    seed: u64,
    true_values: &[Option<f64>],
) -> Result<Vec<ErrorBudget>> {
    if runs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "error budget needs at least 2 runs, got {}",
            runs.len()
        )));
    }
    if n_boot < 2 {
        return Err(Error::InvalidArgument("need at least 2 bootstrap replications".into()));
    }
    let per_run: Vec<(Vec<f64>, Vec<f64>)> = runs
        .par_iter()
        .enumerate()
        .map(|(r, run)| {
            let logx = logx_expected(run);
            let values = specs
                .iter()
                .map(|s| estimate(run, &logx, s))
                .collect::<Result<Vec<f64>>>()?;
            let samples = bootstrap_values_multi(run, specs, n_boot, derive_seed(seed, r as u64))?;
            let bs = samples
                .iter()
                .map(|s| sample_std(&s.values))
                .collect::<Result<Vec<f64>>>()?;
            Ok((values, bs))
        })
        .collect::<Result<_>>()?;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let parts = BudgetParts {
                values: per_run.iter().map(|(v, _)| v[s]).collect(),
                bs: per_run.iter().map(|(_, b)| b[s]).collect(),
            };
            let truth = true_values.get(s).copied().flatten();
            assemble_budget(spec, parts, truth, derive_seed(seed, s as u64))
        })
        .collect())
}

pub fn error_budget(
    runs: &[NsRun],
    spec: &EstimatorSpec,
    n_boot: usize,
    seed: u64,
    true_value: Option<f64>,
) -> Result<ErrorBudget> {
    let mut out = error_budgets(runs, std::slice::from_ref(spec), n_boot, seed, &[true_value])?;
    Ok(out.remove(0))
}

type BudgetField = fn(&ErrorBudget) -> Measured;

/// Budgets for several estimators, rendered as a table or CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub budgets: Vec<ErrorBudget>,
}

/// Formats `value(unc)` with the uncertainty on the last digits shown.
pub fn format_with_uncertainty(value: f64, unc: f64) -> String {
    if !unc.is_finite() || unc <= 0.0 {
        return format!("{value:.4}");
    }
    let exp = unc.log10().floor() as i32;
    let leading = (unc / 10f64.powi(exp)).round() as i64;
    // keep two digits of uncertainty when it starts with a 1
    let digits = if leading < 2 { 1 - exp } else { -exp };
    let decimals = digits.max(0) as usize;
    let scaled = (unc * 10f64.powi(digits)).round() as i64;
    format!("{value:.decimals$}({scaled})")
}

impl DiagnosticReport {
    pub const CSV_HEADER: &'static str = "estimator,n_runs,true_value,mean,mean_unc,sigma_values,sigma_values_unc,sigma_bs,sigma_bs_unc,sigma_imp,sigma_imp_unc,imp_fraction,imp_fraction_unc,rmse,rmse_unc,sigma_imp_rmse,sigma_imp_rmse_unc,imp_rmse_fraction,imp_rmse_fraction_unc";

    /// Column-aligned table with one column per estimator.
    pub fn to_table(&self) -> String {
        let opt = |m: &Option<Measured>| {
            m.map_or_else(|| "-".to_string(), |m| format_with_uncertainty(m.value, m.unc))
        };
        let mut rows: Vec<(String, Vec<String>)> = vec![
            (
                "True Value".into(),
                self.budgets
                    .iter()
                    .map(|b| b.true_value.map_or("-".into(), |t| format!("{t:.4}")))
                    .collect(),
            ),
            (
                "Mean Result".into(),
                self.budgets
                    .iter()
                    .map(|b| format_with_uncertainty(b.mean.value, b.mean.unc))
                    .collect(),
            ),
        ];
        let measured: [(&str, BudgetField); 4] = [
            ("sigma_values", |b| b.sigma_values),
            ("sigma_bs", |b| b.sigma_bs),
            ("sigma_imp", |b| b.sigma_imp),
            ("sigma_imp / sigma_values", |b| b.imp_fraction),
        ];
        for (name, get) in measured {
            rows.push((
                name.into(),
                self.budgets
                    .iter()
                    .map(|b| {
                        let m = get(b);
                        format_with_uncertainty(m.value, m.unc)
                    })
                    .collect(),
            ));
        }
        if self.budgets.iter().any(|b| b.rmse.is_some()) {
            rows.push(("Values RMSE".into(), self.budgets.iter().map(|b| opt(&b.rmse)).collect()));
            rows.push((
                "sigma_imp,RMSE".into(),
                self.budgets.iter().map(|b| opt(&b.sigma_imp_rmse)).collect(),
            ));
            rows.push((
                "sigma_imp,RMSE / RMSE".into(),
                self.budgets.iter().map(|b| opt(&b.imp_rmse_fraction)).collect(),
            ));
        }
        let header: Vec<String> = self.budgets.iter().map(|b| b.estimator.to_string()).collect();
        let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let col_w: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r.1[c].len())
                    .chain(std::iter::once(header[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:label_w$}", "");
        for (h, w) in header.iter().zip(&col_w) {
            let _ = write!(out, "  {h:>w$}");
        }
        out.push('\n');
        for (label, cells) in &rows {
            let _ = write!(out, "{label:label_w$}");
            for (c, w) in cells.iter().zip(&col_w) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        fn opt(m: &Option<Measured>) -> (String, String) {
            m.map_or((String::new(), String::new()), |m| (m.value.to_string(), m.unc.to_string()))
        }
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for b in &self.budgets {
            let (rmse, rmse_u) = opt(&b.rmse);
            let (sir, sir_u) = opt(&b.sigma_imp_rmse);
            let (irf, irf_u) = opt(&b.imp_rmse_fraction);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                b.estimator,
                b.n_runs,
                b.true_value.map_or(String::new(), |t| t.to_string()),
                b.mean.value,
                b.mean.unc,
                b.sigma_values.value,
                b.sigma_values.unc,
                b.sigma_bs.value,
                b.sigma_bs.unc,
                b.sigma_imp.value,
                b.sigma_imp.unc,
                b.imp_fraction.value,
                b.imp_fraction.unc,
                rmse,
                rmse_u,
                sir,
                sir_u,
                irf,
                irf_u
            );
        }
        out
    }
}

/// Thread test, bootstrap distance and verdict for one pair and estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub thread_test: PairTestResult,
    pub distance: PairTestResult,
    /// Holm–Bonferroni decision across the pair's estimators.
    pub rejected: bool,
}

/// All pairwise comparisons of a set of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub alpha: f64,
    pub comparisons: Vec<PairComparison>,
}

/// Runs the thread KS test and bootstrap distance on every pair of runs
/// for every estimator. Holm–Bonferroni is applied to each pair's set of
/// thread p-values. Every run is bootstrapped with `seed`, matching
/// [`bootstrap_distance`].
pub fn pairwise_tests(
    runs: &[NsRun],
    specs: &[EstimatorSpec],
    n_boot: usize,
    seed: u64,
    alpha: f64,
) -> Result<PairwiseReport> {
    if runs.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 runs to compare".into()));
    }
    if n_boot < 2 {
        return Err(Error::InvalidArgument("need at least 2 bootstrap replications".into()));
    }
    holm_bonferroni(&[], alpha)?;
    let threads: Vec<Vec<Vec<f64>>> = runs
        .par_iter()
        .map(|run| {
            let tv = specs
                .iter()
                .map(|s| thread_values(run, s))
                .collect::<Result<Vec<_>>>()?;
            if let Some(v) = tv.first() {
                if v.len() < 2 {
                    return Err(Error::TooFewThreads { needed: 2, found: v.len() });
                }
            }
            Ok(tv)
        })
        .collect::<Result<_>>()?;
    let boots: Vec<Vec<BootstrapSample>> = runs
        .par_iter()
        .map(|run| bootstrap_values_multi(run, specs, n_boot, seed))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..runs.len())
        .flat_map(|i| (i + 1..runs.len()).map(move |j| (i, j)))
        .collect();
    let per_pair: Vec<Vec<PairComparison>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut out = Vec::with_capacity(specs.len());
            for (s, spec) in specs.iter().enumerate() {
                out.push(PairComparison {
                    thread_test: thread_test_from_values(&threads[i][s], &threads[j][s], spec, (i, j))?,
                    distance: distance_from_samples(&boots[i][s], &boots[j][s], (i, j))?,
                    rejected: false,
                });
            }
            let p: Vec<f64> = out.iter().map(|c| c.thread_test.p_value.unwrap_or(1.0)).collect();
            for (c, r) in out.iter_mut().zip(holm_bonferroni(&p, alpha)?) {
                c.rejected = r;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(PairwiseReport {
        alpha,
        comparisons: per_pair.into_iter().flatten().collect(),
    })
}

impl PairwiseReport {
    pub const CSV_HEADER: &'static str = "run_a,run_b,estimator,ks_statistic,p_value,bootstrap_distance,rejected";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.thread_test.runs.0,
                c.thread_test.runs.1,
                c.thread_test.estimator,
                c.thread_test.ks_statistic,
                c.thread_test.p_value.unwrap_or(f64::NAN),
                c.distance.ks_statistic,
                c.rejected
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:>5} {:>5}  {:<14} {:>8} {:>11} {:>9}  {}\n",
            "run_a", "run_b", "estimator", "D", "p", "distance", "verdict"
        );
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{:>5} {:>5}  {:<14} {:>8.4} {:>11.4e} {:>9.4}  {}",
                c.thread_test.runs.0,
                c.thread_test.runs.1,
                c.thread_test.estimator.to_string(),
                c.thread_test.ks_statistic,
                c.thread_test.p_value.unwrap_or(f64::NAN),
                c.distance.ks_statistic,
                if c.rejected { "inconsistent" } else { "consistent" }
            );
        }
        let n_pairs = {
            let mut pairs: Vec<(usize, usize)> =
                self.comparisons.iter().map(|c| c.thread_test.runs).collect();
            pairs.dedup();
            pairs.len()
        };
        let rejected_pairs = {
            let mut pairs: Vec<(usize, usize)> = self
                .comparisons
                .iter()
                .filter(|c| c.rejected)
                .map(|c| c.thread_test.runs)
                .collect();
            pairs.dedup();
            pairs.len()
        };
        let _ = writeln!(
            out,
            "Holm-Bonferroni at alpha={}: {rejected_pairs} of {n_pairs} pairs inconsistent",
            self.alpha
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_imp_examples() {
        assert!((sigma_imp(0.05, 0.03).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(sigma_imp(0.3, 0.4).unwrap(), 0.0);
        let v = sigma_imp(1.81, 0.215).unwrap();
        assert!((v - (1.81f64.powi(2) - 0.215f64.powi(2)).sqrt()).abs() < 1e-14);
        assert!((v - 1.797).abs() < 1e-3);
        assert!(sigma_imp(-1.0, 0.0).is_err());
    }

    #[test]
    fn imp_fraction_examples() {
        assert!((imp_fraction(1.81, 0.215).unwrap() - 0.9929).abs() < 1e-4);
        assert_eq!(imp_fraction(0.7, 0.7).unwrap(), 0.0);
        let s = 0.3;
        assert!((imp_fraction(2f64.sqrt() * s, s).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(imp_fraction(0.0, 0.1).is_err());
    }

    #[test]
    fn rmse_and_combined_examples() {
        assert!((sigma_imp_rmse(0.36, 0.309).unwrap() - 0.1847).abs() < 1e-4);
        assert_eq!(sigma_imp_rmse(0.2, 0.5).unwrap(), 0.0);
        assert!((sigma_imp_rmse(0.05, 0.03).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(sigma_combined(0.4, 4).unwrap(), 0.2);
        assert_eq!(sigma_combined(0.33, 1).unwrap(), 0.33);
        assert!((sigma_combined(1.78, 100).unwrap() - 0.178).abs() < 1e-15);
        assert!(sigma_combined(1.0, 0).is_err());
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap(), 0.25);
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(ks_pvalue(0.0, 10, 10).unwrap(), 1.0);
        let p = ks_pvalue(0.5, 100, 100).unwrap();
        assert!((p - 2.0 * (-25f64).exp()).abs() < 1e-24);
        assert!((ks_pvalue(1.0, 1, 1).unwrap() - 0.7358).abs() < 1e-4);
        assert!(ks_pvalue(1.5, 1, 1).is_err());
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_bonferroni(&[0.01, 0.04], 0.05).unwrap(), vec![true, true]);
        assert_eq!(holm_bonferroni(&[0.04, 0.04], 0.05).unwrap(), vec![false, false]);
        assert!(holm_bonferroni(&[], 0.05).unwrap().is_empty());
        assert_eq!(holm_bonferroni(&[0.5, 0.001, 0.02], 0.05).unwrap(), vec![false, true, true]);
        assert!(holm_bonferroni(&[1.2], 0.05).is_err());
        assert!(holm_bonferroni(&[0.1], 0.0).is_err());
    }

    #[test]
    fn uniform_test_accepts_uniform_grid() {
        let v: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        let (d, p) = ks_uniform_test(&v).unwrap();
        assert!((d - 0.0025).abs() < 1e-12);
        assert!(p > 0.99);
        let skewed: Vec<f64> = v.iter().map(|x| x * x * x).collect();
        assert!(ks_uniform_test(&skewed).unwrap().1 < 1e-6);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn uncertainty_formatting() {
        assert_eq!(format_with_uncertainty(0.326, 0.003), "0.326(3)");
        assert_eq!(format_with_uncertainty(1.78, 0.13), "1.78(13)");
        assert_eq!(format_with_uncertainty(-40.93, 0.03), "-40.93(3)");
    }
}
