//! Bootstrap resampling of threads and weighted kernel density estimates.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate_parts, spec_values, EstimatorSpec};
use crate::run::{combine_runs, decompose_threads, logx_from_nlive, NsRun};
use crate::rng::{derive_seed, rng_from_seed, NsRng};

/// Default number of bootstrap replications.
pub const DEFAULT_BOOTSTRAPS: usize = 200;

/// Estimator values over bootstrap replications of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSample {
    pub values: Vec<f64>,
    pub estimator: EstimatorSpec,
    pub run_id: String,
    pub seed: u64,
}

/// Kernel density estimate evaluated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoid-rule integral of the pdf over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.pdf.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

fn draw_threads(rng: &mut NsRng, k: usize) -> Vec<usize> {
    (0..k).map(|_| rng.random_range(0..k)).collect()
}

fn run_id(run: &NsRun) -> String {
    run.meta().get("id").cloned().unwrap_or_default()
}

/// Resamples the run's threads with replacement (as many as the run has)
/// and merges them into a new run.
pub fn bootstrap_run(run: &NsRun, seed: u64) -> Result<NsRun> {
    let threads = decompose_threads(run)?;
    let k = threads.len();
    if k < 2 {
        return Err(Error::TooFewThreads { needed: 2, found: k });
    }
    let mut rng = rng_from_seed(seed);
    let picked: Vec<NsRun> = draw_threads(&mut rng, k)
        .into_iter()
        .map(|t| threads[t].run.clone())
        .collect();
    combine_runs(&picked)
}

/// Precomputed layout for resampling a run without materialising points.
/// Produces the same replications as [`bootstrap_run`] for the same seed.
pub(crate) struct Resampler<'a> {
    loglikes: Vec<f64>,
    births: Vec<f64>,
    labels: &'a [usize],
    birth_order: Vec<usize>,
    n_threads: usize,
}

/// One resampled run: parent indices (with repeats, in order) and log X.
pub(crate) struct Replication {
    pub index: Vec<usize>,
    pub logx: Vec<f64>,
}

impl<'a> Resampler<'a> {
    pub fn new(run: &'a NsRun) -> Result<Self> {
        let labels = run.thread_labels();
        if labels.len() != run.len() {
            return Err(Error::InvalidRun("thread labels do not cover the points".into()));
        }
        let n_threads = run.n_threads();
        if n_threads < 2 {
            return Err(Error::TooFewThreads {
                needed: 2,
                found: n_threads,
            });
        }
        let births: Vec<f64> = run.points().iter().map(|p| p.birth_loglike).collect();
        let mut birth_order: Vec<usize> = (0..births.len()).collect();
        birth_order.sort_by(|&a, &b| births[a].total_cmp(&births[b]));
        Ok(Resampler {
            loglikes: run.loglikes(),
            births,
            labels,
            birth_order,
            n_threads,
        })
    }

    pub fn loglikes(&self) -> &[f64] {
        &self.loglikes
    }

    pub fn replicate(&self, seed: u64) -> Replication {
        let mut rng = rng_from_seed(seed);
        let mut mult = vec![0u32; self.n_threads];
        for t in draw_threads(&mut rng, self.n_threads) {
            mult[t] += 1;
        }
        let mut index = Vec::with_capacity(self.loglikes.len());
        for (i, &label) in self.labels.iter().enumerate() {
            for _ in 0..mult[label] {
                index.push(i);
            }
        }
        let mut nlive = Vec::with_capacity(index.len());
        let mut born = 0u64;
        let mut b = 0;
        for (k, &i) in index.iter().enumerate() {
            let ll = self.loglikes[i];
            while b < self.birth_order.len() && self.births[self.birth_order[b]] < ll {
                born += u64::from(mult[self.labels[self.birth_order[b]]]);
                b += 1;
            }
            nlive.push((born - k as u64) as u32);
        }
        Replication {
            logx: logx_from_nlive(&nlive),
            index,
        }
    }
}

fn gather(values: &[f64], index: &[usize]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    index.iter().map(|&i| values[i]).collect()
}

/// Bootstrap values of several estimators sharing the same replications.
/// Replication `b` uses seed `derive_seed(seed, b)`.
pub fn bootstrap_values_multi(
    run: &NsRun,
    specs: &[EstimatorSpec],
    n_boot: usize,
    seed: u64,
) -> Result<Vec<BootstrapSample>> {
    if n_boot < 1 {
        return Err(Error::InvalidArgument("need at least one bootstrap replication".into()));
    }
    for spec in specs {
        spec.check_dim(run.dim())?;
    }
    let resampler = Resampler::new(run)?;
    let fvals: Vec<Vec<f64>> = specs
        .iter()
        .map(|s| spec_values(run, s))
        .collect::<Result<_>>()?;
    let per_rep: Vec<Vec<f64>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let rep = resampler.replicate(derive_seed(seed, b as u64));
            let ll = gather(resampler.loglikes(), &rep.index);
            specs
                .iter()
                .zip(&fvals)
                .map(|(spec, f)| estimate_parts(&ll, &gather(f, &rep.index), &rep.logx, spec))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let id = run_id(run);
    Ok(specs
        .iter()
        .enumerate()
        .map(|(s, spec)| BootstrapSample {
            values: per_rep.iter().map(|v| v[s]).collect(),
            estimator: spec.clone(),
            run_id: id.clone(),
            seed,
        })
        .collect())
}

/// `values[b]` is the estimate on `bootstrap_run(run, derive_seed(seed, b))`.
pub fn bootstrap_values(
    run: &NsRun,
    spec: &EstimatorSpec,
    n_boot: usize,
    seed: u64,
) -> Result<BootstrapSample> {
    let mut out = bootstrap_values_multi(run, std::slice::from_ref(spec), n_boot, seed)?;
    Ok(out.remove(0))
}

/// Sample standard deviation (divisor `n - 1`).
pub fn sample_std(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standard deviation needs at least 2 values, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

pub fn bootstrap_std(sample: &BootstrapSample) -> Result<f64> {
    sample_std(&sample.values)
}

fn normalised_weights(samples: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if samples.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Scott's rule with the effective sample size of the weights:
/// `sigma_w * n_eff^(-1/5)`, `n_eff = (sum w)^2 / sum w^2`.
/// Falls back to 1 when the weighted sample has no spread.
pub fn scott_bandwidth(samples: &[f64], weights: &[f64]) -> Result<f64> {
    let w = normalised_weights(samples, weights)?;
    let mean: f64 = w.iter().zip(samples).map(|(w, x)| w * x).sum();
    let var: f64 = w.iter().zip(samples).map(|(w, x)| w * (x - mean).powi(2)).sum();
    let n_eff = 1.0 / w.iter().map(|w| w * w).sum::<f64>();
    let h = var.sqrt() * n_eff.powf(-0.2);
    Ok(if h > 0.0 && h.is_finite() { h } else { 1.0 })
}

/// Gaussian-kernel density of weighted samples with Scott's bandwidth.
pub fn weighted_kde(samples: &[f64], weights: &[f64], grid: &[f64]) -> Result<DensityCurve> {
    let h = scott_bandwidth(samples, weights)?;
    weighted_kde_with_bandwidth(samples, weights, grid, h)
}

pub fn weighted_kde_with_bandwidth(
    samples: &[f64],
    weights: &[f64],
    grid: &[f64],
    bandwidth: f64,
) -> Result<DensityCurve> {
    let w = normalised_weights(samples, weights)?;
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    if grid.windows(2).any(|g| g[1] < g[0]) {
        return Err(Error::InvalidArgument("grid must be sorted".into()));
    }
    let mut order: Vec<usize> = (0..samples.len()).filter(|&i| w[i] > 0.0).collect();
    order.sort_by(|&a, &b| samples[a].total_cmp(&samples[b]));
    let xs: Vec<f64> = order.iter().map(|&i| samples[i]).collect();
    let ws: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    // beyond 9 bandwidths a kernel contributes < 1e-17 of its peak
    let reach = 9.0 * bandwidth;
    let norm = 1.0 / (bandwidth * (2.0 * PI).sqrt());
    let pdf = grid
        .iter()
        .map(|&g| {
            let lo = xs.partition_point(|&x| x < g - reach);
            let hi = xs.partition_point(|&x| x <= g + reach);
            (lo..hi)
                .map(|i| {
                    let z = (g - xs[i]) / bandwidth;
                    ws[i] * (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityCurve {
        grid: grid.to_vec(),
        pdf,
        bandwidth,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
