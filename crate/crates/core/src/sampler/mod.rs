//! Run generation: a perfect nested sampler for the spherical Gaussian and
//! an imperfect slice-sampling nested sampler with a `num_repeats` knob.
//!
//! Both samplers share the same constant-`nlive` driver: the lowest live
//! point dies, is replaced by a point drawn above its contour, and the loop
//! stops once `max L_live + log X < log Z + log(termination_frac)`.  The
//! surviving live points are then appended as the final dead points.

mod likelihood;
mod perfect;
mod slice;

pub use likelihood::{
    gaussian_loglike, log_ball_volume, loggamma_logpdf, loggamma_mix_loglike, true_logz,
    LikelihoodSpec, PriorSpec, PRIOR_HALF_WIDTH,
};
pub use perfect::{perfect_ns_gaussian, true_logx_ball};
pub use slice::slice_ns;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, NsRng};
use crate::run::{Meta, NsRun, SamplePoint};

/// Hard cap on the number of deaths, so a pathological setting surfaces as
/// an error rather than a hang.
const MAX_ITERATIONS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSettings {
    pub nlive: usize,
    /// Slice updates per replacement point (ignored by the perfect sampler).
    pub num_repeats: usize,
    pub termination_frac: f64,
    pub seed: u64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            nlive: 250,
            num_repeats: 10,
            termination_frac: 1e-3,
            seed: 0,
        }
    }
}

impl SamplerSettings {
    pub fn new(nlive: usize, seed: u64) -> Self {
        SamplerSettings {
            nlive,
            seed,
            ..Default::default()
        }
    }

    pub fn with_num_repeats(mut self, num_repeats: usize) -> Self {
        self.num_repeats = num_repeats;
        self
    }

    pub fn with_termination_frac(mut self, frac: f64) -> Self {
        self.termination_frac = frac;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nlive == 0 {
            return Err(Error::InvalidArgument("nlive must be positive".into()));
        }
        if self.num_repeats == 0 {
            return Err(Error::InvalidArgument("num_repeats must be positive".into()));
        }
        if !(self.termination_frac > 0.0 && self.termination_frac < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "termination_frac must lie in (0, 1), got {}",
                self.termination_frac
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LivePoint {
    pub params: Vec<f64>,
    pub loglike: f64,
    pub birth: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Draws `nlive` points uniformly from the prior box.
pub(crate) fn initial_live(
    rng: &mut NsRng,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    nlive: usize,
) -> Vec<LivePoint> {
    let d = likelihood.dim();
    (0..nlive)
        .map(|_| {
            let params: Vec<f64> = (0..d)
                .map(|_| rng.random_range(-prior.half_width..prior.half_width))
                .collect();
            let loglike = likelihood.loglike(&params);
            LivePoint {
                params,
                loglike,
                birth: f64::NEG_INFINITY,
            }
        })
        .collect()
}

/// Shared constant-`nlive` loop. `replace(rng, live, dying, contour)` must
/// return a point with log-likelihood strictly above `contour`.
pub(crate) fn run_nested<F>(
    rng: &mut NsRng,
    mut live: Vec<LivePoint>,
    termination_frac: f64,
    mut replace: F,
) -> Result<Vec<SamplePoint>>
where
    F: FnMut(&mut NsRng, &[LivePoint], usize, f64) -> Result<(Vec<f64>, f64)>,
{
    let n = live.len();
    let log_frac = termination_frac.ln();
    let shrink = -1.0 / n as f64;
    let mut dead = Vec::new();
    let mut logx = 0.0f64;
    let mut logz = f64::NEG_INFINITY;

    for _ in 0..MAX_ITERATIONS {
        let (mut imin, mut lmin, mut lmax) = (0, f64::INFINITY, f64::NEG_INFINITY);
        for (i, p) in live.iter().enumerate() {
            if p.loglike < lmin {
                imin = i;
                lmin = p.loglike;
            }
            lmax = lmax.max(p.loglike);
        }
        if lmax + logx < logz + log_frac {
            live.sort_by(|a, b| a.loglike.total_cmp(&b.loglike));
            dead.extend(
                live.into_iter()
                    .map(|p| SamplePoint::new(p.params, p.loglike, p.birth)),
            );
            return Ok(dead);
        }
        let logx_next = logx + shrink;
        // log(X_{i-1} - X_i) = logx + log(1 - e^{-1/n})
        logz = log_add_exp(logz, lmin + logx + (-(shrink.exp_m1())).ln());
        logx = logx_next;

        let (params, loglike) = replace(rng, &live, imin, lmin)?;
        debug_assert!(loglike > lmin);
        let old = std::mem::replace(
            &mut live[imin],
            LivePoint {
                params,
                loglike,
                birth: lmin,
            },
        );
        dead.push(SamplePoint::new(old.params, old.loglike, old.birth));
    }
    Err(Error::InvalidRun(format!(
        "sampler did not terminate within {MAX_ITERATIONS} iterations"
    )))
}

pub(crate) fn run_meta(
    likelihood: &LikelihoodSpec,
    settings: &SamplerSettings,
    sampler: &str,
) -> Meta {
    let mut meta = Meta::new();
    meta.insert("likelihood".into(), likelihood.to_string());
    meta.insert("dim".into(), likelihood.dim().to_string());
    meta.insert("nlive".into(), settings.nlive.to_string());
    meta.insert("termination_frac".into(), settings.termination_frac.to_string());
    meta.insert("seed".into(), settings.seed.to_string());
    meta.insert("sampler".into(), sampler.into());
    if sampler == "slice" {
        meta.insert("num_repeats".into(), settings.num_repeats.to_string());
    }
    meta
}

pub(crate) fn finish_run(points: Vec<SamplePoint>, meta: Meta) -> Result<NsRun> {
    NsRun::from_sorted_points(points, meta)
}

pub(crate) fn rng_for(settings: &SamplerSettings) -> NsRng {
    rng_from_seed(settings.seed)
}

/// Which sampler generates an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Perfect,
    Slice,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Perfect => "perfect",
            SamplerKind::Slice => "slice",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(SamplerKind::Perfect),
            "slice" => Ok(SamplerKind::Slice),
            other => Err(Error::InvalidArgument(format!("unknown sampler {other:?}"))),
        }
    }
}

/// Generates `n_runs` independent runs in parallel. Run `i` uses seed
/// `derive_seed(settings.seed, i)` and carries meta `id = i`, so the
/// ensemble is reproducible regardless of thread scheduling.
pub fn generate_runs(
    kind: SamplerKind,
    likelihood: LikelihoodSpec,
    settings: SamplerSettings,
    n_runs: usize,
) -> Result<Vec<NsRun>> {
    settings.validate()?;
    if kind == SamplerKind::Perfect && !matches!(likelihood, LikelihoodSpec::Gaussian { .. }) {
        return Err(Error::InvalidArgument(
            "the perfect sampler only supports the Gaussian likelihood".into(),
        ));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let s = settings.with_seed(derive_seed(settings.seed, i as u64));
            let run = match kind {
                SamplerKind::Perfect => perfect_ns_gaussian(likelihood.dim(), &s)?,
                SamplerKind::Slice => slice_ns(&likelihood, &s)?,
            };
            Ok(run.with_meta("id", i.to_string()))
        })
        .collect()
}
