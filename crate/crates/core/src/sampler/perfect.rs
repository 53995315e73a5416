use rand::Rng;
use rand_distr::StandardNormal;

use super::likelihood::{log_ball_volume, LikelihoodSpec, PriorSpec};
use super::{finish_run, initial_live, rng_for, run_meta, run_nested, SamplerSettings};
use crate::error::Result;
use crate::rng::NsRng;
use crate::run::NsRun;

/// Uniform draw from the open ball of radius `radius`.
fn uniform_in_ball(rng: &mut NsRng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
        x.iter_mut().for_each(|v| *v *= r);
        return x;
    }
}

fn uniform_in_box(rng: &mut NsRng, dim: usize, prior: &PriorSpec) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.random_range(-prior.half_width..prior.half_width))
        .collect()
}

/// Log prior volume enclosed by the contour `|theta| = radius`, valid while
/// the ball lies inside the prior box.
pub fn true_logx_ball(dim: usize, radius: f64) -> f64 {
    log_ball_volume(dim, radius) - PriorSpec::default().log_volume(dim)
}

/// Exact nested sampling of the unit spherical Gaussian on the box prior.
///
/// Once the contour radius is at most the box half-width, replacements are
/// drawn directly and uniformly inside the ball.  Before that the
/// constrained region is the ball clipped by the box, and replacements come
/// from rejection sampling using whichever of ball or box is smaller as the
/// proposal; both are exact.
pub fn perfect_ns_gaussian(dim: usize, settings: &SamplerSettings) -> Result<NsRun> {
    settings.validate()?;
    let likelihood = LikelihoodSpec::gaussian(dim)?;
    let prior = PriorSpec::default();
    let log_box = prior.log_volume(dim);
    let mut rng = rng_for(settings);
    let live = initial_live(&mut rng, &likelihood, &prior, settings.nlive);

    let points = run_nested(&mut rng, live, settings.termination_frac, |rng, live, dying, contour| {
        let rstar = live[dying].params.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ball_inside = rstar <= prior.half_width;
        let ball_smaller = ball_inside || log_ball_volume(dim, rstar) < log_box;
        loop {
            let x = if ball_smaller {
                uniform_in_ball(rng, dim, rstar)
            } else {
                uniform_in_box(rng, dim, &prior)
            };
            if !ball_inside && !prior.contains(&x) {
                continue;
            }
            let l = likelihood.loglike(&x);
            if l > contour {
                return Ok((x, l));
            }
        }
    })?;
    finish_run(points, run_meta(&likelihood, settings, "perfect"))
}
