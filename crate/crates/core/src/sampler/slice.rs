use rand::Rng;
use rand_distr::StandardNormal;

use super::likelihood::{LikelihoodSpec, PriorSpec};
use super::{finish_run, initial_live, rng_for, run_meta, run_nested, LivePoint, SamplerSettings};
use crate::error::{Error, Result};
use crate::rng::NsRng;
use crate::run::NsRun;

const MAX_STEP_OUT: usize = 20;
const MAX_SHRINK: usize = 100;

fn random_direction(rng: &mut NsRng, dim: usize) -> Vec<f64> {
    loop {
        let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            u.iter_mut().for_each(|v| *v /= norm);
            return u;
        }
    }
}

/// Sample covariance of the live points (row-major `dim x dim`).
fn live_covariance(live: &[LivePoint], dim: usize) -> Vec<f64> {
    let n = live.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in live {
        for (m, x) in mean.iter_mut().zip(&p.params) {
            *m += x / n;
        }
    }
    let mut cov = vec![0.0; dim * dim];
    for p in live {
        for a in 0..dim {
            let da = p.params[a] - mean[a];
            for b in a..dim {
                cov[a * dim + b] += da * (p.params[b] - mean[b]);
            }
        }
    }
    let denom = (n - 1.0).max(1.0);
    for a in 0..dim {
        for b in a..dim {
            let v = cov[a * dim + b] / denom;
            cov[a * dim + b] = v;
            cov[b * dim + a] = v;
        }
    }
    cov
}

/// Standard deviation of the live points projected onto `u`.
fn spread_along(cov: &[f64], u: &[f64]) -> f64 {
    let d = u.len();
    let mut q = 0.0;
    for a in 0..d {
        for b in 0..d {
            q += u[a] * cov[a * d + b] * u[b];
        }
    }
    q.max(0.0).sqrt()
}

/// One univariate slice update of `x` along `u` within the region
/// `{L > contour} ∩ box`. Returns the new point and its log-likelihood.
fn slice_update(
    rng: &mut NsRng,
    likelihood: &LikelihoodSpec,
    prior: &PriorSpec,
    contour: f64,
    x: &[f64],
    u: &[f64],
    width: f64,
) -> Result<(Vec<f64>, f64)> {
    let at = |t: f64| -> Vec<f64> { x.iter().zip(u).map(|(a, b)| a + t * b).collect() };
    let inside = |y: &[f64]| prior.contains(y) && likelihood.loglike(y) > contour;

    let offset = rng.random::<f64>() * width;
    let (mut lo, mut hi) = (-offset, width - offset);
    for _ in 0..MAX_STEP_OUT {
        if !inside(&at(lo)) {
            break;
        }
        lo -= width;
    }
    for _ in 0..MAX_STEP_OUT {
        if !inside(&at(hi)) {
            break;
        }
        hi += width;
    }
    for _ in 0..MAX_SHRINK {
        let t = lo + rng.random::<f64>() * (hi - lo);
        let y = at(t);
        if prior.contains(&y) {
            let l = likelihood.loglike(&y);
            if l > contour {
                return Ok((y, l));
            }
        }
        if t < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    Err(Error::SliceBracketFailure(MAX_SHRINK))
}

/// Constant-`nlive` nested sampling where each replacement starts from a
/// uniformly chosen surviving live point and takes `num_repeats`
/// univariate slice-sampling steps along random isotropic directions.
///
/// The initial bracket width is the live points' standard deviation along
/// the chosen direction (1 if that is zero), stepped out linearly by at
/// most 20 widths per side and shrunk at most 100 times; exhausting the
/// shrinkage budget is reported as [`Error::SliceBracketFailure`].
pub fn slice_ns(likelihood: &LikelihoodSpec, settings: &SamplerSettings) -> Result<NsRun> {
    settings.validate()?;
    if settings.nlive < 2 {
        return Err(Error::InvalidArgument(
            "the slice sampler needs at least two live points".into(),
        ));
    }
    let dim = likelihood.dim();
    let prior = PriorSpec::default();
    let mut rng = rng_for(settings);
    let live = initial_live(&mut rng, likelihood, &prior, settings.nlive);

    let points = run_nested(&mut rng, live, settings.termination_frac, |rng, live, dying, contour| {
        let cov = live_covariance(live, dim);
        let mut start = rng.random_range(0..live.len() - 1);
        if start >= dying {
            start += 1;
        }
        let mut x = live[start].params.clone();
        let mut l = live[start].loglike;
        for _ in 0..settings.num_repeats {
            let u = random_direction(rng, dim);
            let w = spread_along(&cov, &u);
            let w = if w > 0.0 && w.is_finite() { w } else { 1.0 };
            (x, l) = slice_update(rng, likelihood, &prior, contour, &x, &u, w)?;
        }
        Ok((x, l))
    })?;
    finish_run(points, run_meta(likelihood, settings, "slice"))
}
