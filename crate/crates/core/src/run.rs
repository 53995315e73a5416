//! Nested sampling runs, thread decomposition and prior-volume coordinates.
//!
//! A run is an ordered list of dead points. Each point records the contour
//! it was sampled inside (`birth_loglike`); following births back through
//! the points that died at those contours splits the run into threads,
//! single-live-point runs whose log X values form a rate-1 Poisson process.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result, Violation, ViolationKind};
use crate::rng::substream;

pub type Meta = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub params: Vec<f64>,
    pub loglike: f64,
    /// Contour the point was sampled within; `-inf` means the whole prior.
    pub birth_loglike: f64,
}

impl SamplePoint {
    pub fn new(params: Vec<f64>, loglike: f64, birth_loglike: f64) -> Self {
        SamplePoint {
            params,
            loglike,
            birth_loglike,
        }
    }
}

/// Dead points sorted by log-likelihood with their live-point counts and
/// thread labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NsRun {
    points: Vec<SamplePoint>,
    nlive: Vec<u32>,
    thread_labels: Vec<usize>,
    meta: Meta,
}

/// A single-live-point run extracted from a parent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Thread {
    pub run: NsRun,
    /// Contour the thread started from (`-inf` for the prior).
    pub entry_loglike: f64,
}

impl NsRun {
    /// Builds a run from unsorted points, reconstructing live counts and
    /// threads from the birth contours. Tied log-likelihoods are rejected.
    pub fn from_points(points: Vec<SamplePoint>, meta: Meta) -> Result<Self> {
        let (sorted, _) = sort_points(points)?;
        Self::from_sorted_points(sorted, meta)
    }

    /// Like [`NsRun::from_points`] for points already in ascending order.
    pub fn from_sorted_points(points: Vec<SamplePoint>, meta: Meta) -> Result<Self> {
        check_points(&points)?;
        for i in 1..points.len() {
            let (a, b) = (points[i - 1].loglike, points[i].loglike);
            if b < a {
                return Err(Error::Unsorted { index: i });
            }
            if b == a {
                return Err(Error::TiedLoglike { index: i, value: b });
            }
        }
        let nlive = live_point_counts(&points)?;
        let thread_labels = assign_thread_labels(&points)?;
        Ok(NsRun {
            points,
            nlive,
            thread_labels,
            meta,
        })
    }

    /// Assembles a run without checking anything; see [`validate_run`].
    pub fn from_raw_parts(
        points: Vec<SamplePoint>,
        nlive: Vec<u32>,
        thread_labels: Vec<usize>,
        meta: Meta,
    ) -> Self {
        NsRun {
            points,
            nlive,
            thread_labels,
            meta,
        }
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn nlive(&self) -> &[u32] {
        &self.nlive
    }

    pub fn thread_labels(&self) -> &[usize] {
        &self.thread_labels
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parameter dimension (0 for an empty run).
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.params.len())
    }

    pub fn n_threads(&self) -> usize {
        self.thread_labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn loglikes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.loglike).collect()
    }

    pub fn into_points(self) -> Vec<SamplePoint> {
        self.points
    }
}

fn check_points(points: &[SamplePoint]) -> Result<()> {
    let first = points.first().ok_or(Error::EmptyRun)?;
    let dim = first.params.len();
    for (i, p) in points.iter().enumerate() {
        if p.params.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.params.len(),
            });
        }
        if !p.loglike.is_finite() {
            return Err(Error::NonFinite {
                index: i,
                value: p.loglike,
            });
        }
        if p.birth_loglike.is_nan() {
            return Err(Error::NonFinite {
                index: i,
                value: p.birth_loglike,
            });
        }
        if p.birth_loglike >= p.loglike {
            return Err(Error::BirthNotBelow { index: i });
        }
    }
    Ok(())
}

/// Sorts points by log-likelihood, returning the permutation applied
/// (`perm[k]` is the input index of sorted point `k`).
pub fn sort_points(points: Vec<SamplePoint>) -> Result<(Vec<SamplePoint>, Vec<usize>)> {
    for (i, p) in points.iter().enumerate() {
        if p.loglike.is_nan() {
            return Err(Error::NonFinite {
                index: i,
                value: p.loglike,
            });
        }
    }
    let mut perm: Vec<usize> = (0..points.len()).collect();
    perm.sort_by(|&a, &b| points[a].loglike.total_cmp(&points[b].loglike));
    let mut slots: Vec<Option<SamplePoint>> = points.into_iter().map(Some).collect();
    let sorted = perm
        .iter()
        .map(|&i| slots[i].take().expect("permutation visits each index once"))
        .collect();
    Ok((sorted, perm))
}

/// Returns every broken run invariant; an empty list means the run is valid.
///
/// Equal log-likelihoods are tolerated across different threads, which is
/// how resampled runs carry duplicated threads.
pub fn validate_run(run: &NsRun) -> Vec<Violation> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Violation>, kind, index| out.push(Violation { kind, index });
    let points = &run.points;
    let dim = run.dim();
    let labels_ok = run.thread_labels.len() == points.len();
    for (i, p) in points.iter().enumerate() {
        if p.params.len() != dim {
            push(&mut out, ViolationKind::Dimension, i);
        }
        if !p.loglike.is_finite() {
            push(&mut out, ViolationKind::NonFiniteLoglike, i);
        }
        if i > 0 {
            let prev = points[i - 1].loglike;
            if p.loglike < prev {
                push(&mut out, ViolationKind::Unsorted, i);
            } else if p.loglike == prev
                && labels_ok
                && run.thread_labels[i] == run.thread_labels[i - 1]
            {
                push(&mut out, ViolationKind::Tied, i);
            }
        }
        if p.birth_loglike.is_nan() || p.birth_loglike >= p.loglike {
            push(&mut out, ViolationKind::BirthNotBelow, i);
        }
    }
    if run.nlive.len() != points.len() {
        push(&mut out, ViolationKind::NliveLength, run.nlive.len().min(points.len()));
    }
    if !labels_ok {
        push(&mut out, ViolationKind::LabelLength, run.thread_labels.len().min(points.len()));
    }
    if !out.is_empty() {
        return out;
    }

    let expected = counts_unchecked(points);
    for (i, (&n, &e)) in run.nlive.iter().zip(&expected).enumerate() {
        if n < 1 {
            push(&mut out, ViolationKind::NliveZero, i);
        } else if n != e {
            push(&mut out, ViolationKind::NliveMismatch, i);
        }
    }
    let mut last: HashMap<usize, f64> = HashMap::new();
    for (i, (p, &label)) in points.iter().zip(&run.thread_labels).enumerate() {
        if let Some(prev) = last.insert(label, p.loglike) {
            if p.birth_loglike != prev {
                push(&mut out, ViolationKind::BrokenChain, i);
            }
        }
    }
    out
}

/// Number of live points present when each point died.
///
/// For sorted points this is `#{j : birth_j < loglike_i} - i`: every point
/// born below the contour, minus those that already died. With distinct
/// log-likelihoods it equals `#{j : birth_j < loglike_i <= loglike_j}`.
pub fn live_point_counts(points: &[SamplePoint]) -> Result<Vec<u32>> {
    for (i, p) in points.iter().enumerate() {
        if p.birth_loglike.is_nan() || !(p.birth_loglike < p.loglike) {
            return Err(Error::BirthNotBelow { index: i });
        }
        if i > 0 && p.loglike < points[i - 1].loglike {
            return Err(Error::Unsorted { index: i });
        }
    }
    Ok(counts_unchecked(points))
}

fn counts_unchecked(points: &[SamplePoint]) -> Vec<u32> {
    let mut births: Vec<f64> = points.iter().map(|p| p.birth_loglike).collect();
    births.sort_by(f64::total_cmp);
    let mut born = 0usize;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            while born < births.len() && births[born] < p.loglike {
                born += 1;
            }
            born.saturating_sub(i) as u32
        })
        .collect()
}

fn key(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// Follows birth contours to give each sorted point a thread label.
///
/// A finite birth contour must equal the log-likelihood of an earlier
/// point; when several points were born on the same contour they take the
/// matching predecessors greedily in order. New threads open only for
/// points born from the prior.
pub fn assign_thread_labels(points: &[SamplePoint]) -> Result<Vec<usize>> {
    let mut by_loglike: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        by_loglike.entry(key(p.loglike)).or_default().push(i);
    }
    let mut taken: HashMap<u64, usize> = HashMap::new();
    let mut labels = vec![usize::MAX; points.len()];
    let mut n_threads = 0;
    for (i, p) in points.iter().enumerate() {
        if p.birth_loglike == f64::NEG_INFINITY {
            labels[i] = n_threads;
            n_threads += 1;
            continue;
        }
        let k = key(p.birth_loglike);
        let candidates = by_loglike
            .get(&k)
            .ok_or(Error::BirthContourMissing { index: i })?;
        let next = taken.entry(k).or_insert(0);
        let pred = *candidates
            .get(*next)
            .filter(|&&j| j < i)
            .ok_or(Error::BirthChainAmbiguous { index: i })?;
        *next += 1;
        labels[i] = labels[pred];
    }
    Ok(labels)
}

/// Splits a run into its threads, ordered by label.
pub fn decompose_threads(run: &NsRun) -> Result<Vec<Thread>> {
    if run.thread_labels.len() != run.points.len() {
        return Err(Error::InvalidRun("thread labels do not cover the points".into()));
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); run.n_threads()];
    for (i, &label) in run.thread_labels.iter().enumerate() {
        groups[label].push(i);
    }
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|idx| {
            let points: Vec<SamplePoint> = idx.iter().map(|&i| run.points[i].clone()).collect();
            let entry_loglike = points[0].birth_loglike;
            let n = points.len();
            Ok(Thread {
                run: NsRun::from_raw_parts(points, vec![1; n], vec![0; n], run.meta.clone()),
                entry_loglike,
            })
        })
        .collect()
}

/// Merges runs into one, recounting live points from the union of birth
/// contours. Thread labels are kept distinct and renumbered in order of
/// first appearance.
pub fn combine_runs(runs: &[NsRun]) -> Result<NsRun> {
    let first = runs.first().ok_or(Error::EmptyRun)?;
    let dim = first.dim();
    let like = first.meta.get("likelihood");
    let total: usize = runs.iter().map(NsRun::len).sum();
    let mut tagged: Vec<(&SamplePoint, usize)> = Vec::with_capacity(total);
    let mut offset = 0;
    for run in runs {
        if run.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: run.dim(),
            });
        }
        if let (Some(a), Some(b)) = (like, run.meta.get("likelihood")) {
            if a != b {
                return Err(Error::LikelihoodMismatch(a.clone(), b.clone()));
            }
        }
        if run.thread_labels.len() != run.len() {
            return Err(Error::InvalidRun("thread labels do not cover the points".into()));
        }
        tagged.extend(
            run.points
                .iter()
                .zip(&run.thread_labels)
                .map(|(p, &t)| (p, t + offset)),
        );
        offset += run.n_threads();
    }
    tagged.sort_by(|a, b| a.0.loglike.total_cmp(&b.0.loglike));

    let mut renumber: HashMap<usize, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(total);
    let mut points = Vec::with_capacity(total);
    for (p, t) in tagged {
        let next = renumber.len();
        labels.push(*renumber.entry(t).or_insert(next));
        points.push(p.clone());
    }
    let nlive = live_point_counts(&points)?;
    let mut meta = first.meta.clone();
    if runs.len() > 1 {
        meta.insert("combined_runs".into(), runs.len().to_string());
    }
    Ok(NsRun::from_raw_parts(points, nlive, labels, meta))
}

/// Expected log X at each dead point: `-sum_{k<=i} 1/nlive[k]`.
pub fn logx_expected(run: &NsRun) -> Vec<f64> {
    logx_from_nlive(&run.nlive)
}

pub fn logx_from_nlive(nlive: &[u32]) -> Vec<f64> {
    let mut acc = 0.0;
    nlive
        .iter()
        .map(|&n| {
            acc -= 1.0 / f64::from(n);
            acc
        })
        .collect()
}

/// Joint draws of log X for every point: `log t_k = log(u_k) / nlive[k]`
/// accumulated along the run. Row `r` uses substream `r` of `seed`.
pub fn simulate_logx(run: &NsRun, n_sim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n_sim == 0 {
        return Err(Error::InvalidArgument("n_sim must be at least 1".into()));
    }
    let nlive = &run.nlive;
    Ok((0..n_sim)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let mut acc = 0.0;
            nlive
                .iter()
                .map(|&n| {
                    // open interval (0, 1) so log u is finite
                    let u: f64 = 1.0 - rng.random::<f64>();
                    acc += u.ln() / f64::from(n);
                    acc
                })
                .collect()
        })
        .collect())
}
