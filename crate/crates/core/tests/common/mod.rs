#![allow(dead_code)]

use nsdiag::rng::rng_from_seed;
use nsdiag::{Meta, NsRun, SamplePoint};
use rand::Rng;

/// A toy nested-sampling run on abstract log-likelihood values. The number
/// of live points drifts when `vary` is set: some deaths are not replaced
/// and some extra points are born from the prior (each contour spawns at
/// most one point, so thread chaining is unambiguous).
pub fn toy_run(seed: u64, nlive: usize, steps: usize, vary: bool) -> NsRun {
    let mut rng = rng_from_seed(seed);
    let mut live: Vec<(f64, f64)> = (0..nlive).map(|_| (rng.random::<f64>(), f64::NEG_INFINITY)).collect();
    let mut dead = Vec::new();
    for _ in 0..steps {
        if live.is_empty() {
            break;
        }
        let imin = (0..live.len())
            .min_by(|&a, &b| live[a].0.total_cmp(&live[b].0))
            .unwrap();
        let (l, b) = live.swap_remove(imin);
        dead.push((l, b));
        let (replace, extra) = if vary {
            (rng.random_bool(0.7), rng.random_bool(0.2))
        } else {
            (true, false)
        };
        if replace {
            live.push((l + rng.random::<f64>() * 0.5 + 1e-9, l));
        }
        if extra {
            live.push((l + rng.random::<f64>() * 0.5 + 1e-9, f64::NEG_INFINITY));
        }
    }
    live.sort_by(|a, b| a.0.total_cmp(&b.0));
    dead.extend(live);
    let points = dead
        .into_iter()
        .map(|(l, b)| SamplePoint::new(vec![l, rng.random_range(-1.0..1.0)], l, b))
        .collect();
    NsRun::from_points(points, Meta::new()).unwrap()
}

/// Live count by direct enumeration: points born below `L_i` that have not
/// died before point `i`.
pub fn brute_counts(points: &[SamplePoint]) -> Vec<u32> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, q)| q.birth_loglike < p.loglike && *j >= i)
                .count() as u32
        })
        .collect()
}

/// Two-sample KS statistic by evaluating both ECDFs at every pooled value.
pub fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}
