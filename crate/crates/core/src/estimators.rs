//! Posterior weights, evidence and scalar estimators over a run.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::run::NsRun;

/// Signature of a caller-supplied parameter function.
pub type ParamFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Scalar function of a parameter vector.
#[derive(Clone)]
pub enum ParamFunction {
    /// Zero-based coordinate index; written `t1`, `t2`, ... (one-based).
    Coordinate(usize),
    /// Euclidean norm `|theta|`; written `r`.
    Radial,
    /// Caller-supplied function with a display name.
    Custom {
        name: String,
        func: Arc<ParamFn>,
    },
}

impl ParamFunction {
    pub fn custom(name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ParamFunction::Custom {
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match *self {
            ParamFunction::Coordinate(i) if i >= dim => {
                Err(Error::CoordinateOutOfRange { index: i, dim })
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            ParamFunction::Coordinate(i) => theta[*i],
            ParamFunction::Radial => theta.iter().map(|x| x * x).sum::<f64>().sqrt(),
            ParamFunction::Custom { func, .. } => func(theta),
        }
    }

    /// Values of the function at every point of `run`.
    pub fn values(&self, run: &NsRun) -> Result<Vec<f64>> {
        self.check_dim(run.dim())?;
        Ok(run.points().iter().map(|p| self.eval(&p.params)).collect())
    }
}

impl fmt::Debug for ParamFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParamFunction({self})")
    }
}

impl fmt::Display for ParamFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamFunction::Coordinate(i) => write!(f, "t{}", i + 1),
            ParamFunction::Radial => f.write_str("r"),
            ParamFunction::Custom { name, .. } => f.write_str(name),
        }
    }
}

impl PartialEq for ParamFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ParamFunction::Coordinate(a), ParamFunction::Coordinate(b)) => a == b,
            (ParamFunction::Radial, ParamFunction::Radial) => true,
            (ParamFunction::Custom { func: a, .. }, ParamFunction::Custom { func: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

impl FromStr for ParamFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "r" {
            return Ok(ParamFunction::Radial);
        }
        s.strip_prefix('t')
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| ParamFunction::Coordinate(n - 1))
            .ok_or_else(|| Error::BadEstimator(s.to_string()))
    }
}

/// A scalar posterior quantity.
///
/// Canonical strings: `logz`, `mean:t1`, `median:r`, `cred:t2:0.84`,
/// `moment2:t1`.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    LogEvidence,
    Mean(ParamFunction),
    Median(ParamFunction),
    Credible(ParamFunction, f64),
    SecondMoment(ParamFunction),
}

impl EstimatorSpec {
    pub fn function(&self) -> Option<&ParamFunction> {
        match self {
            EstimatorSpec::LogEvidence => None,
            EstimatorSpec::Mean(f)
            | EstimatorSpec::Median(f)
            | EstimatorSpec::Credible(f, _)
            | EstimatorSpec::SecondMoment(f) => Some(f),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        self.function().map_or(Ok(()), |f| f.check_dim(dim))
    }

    /// Parses a comma-separated list such as `logz,mean:t1`.
    pub fn parse_list(s: &str) -> Result<Vec<EstimatorSpec>> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::LogEvidence => f.write_str("logz"),
            EstimatorSpec::Mean(p) => write!(f, "mean:{p}"),
            EstimatorSpec::Median(p) => write!(f, "median:{p}"),
            EstimatorSpec::Credible(p, level) => write!(f, "cred:{p}:{level}"),
            EstimatorSpec::SecondMoment(p) => write!(f, "moment2:{p}"),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadEstimator(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["logz"] => Ok(EstimatorSpec::LogEvidence),
            ["mean", f] => Ok(EstimatorSpec::Mean(f.parse().map_err(|_| bad())?)),
            ["median", f] => Ok(EstimatorSpec::Median(f.parse().map_err(|_| bad())?)),
            ["moment2", f] => Ok(EstimatorSpec::SecondMoment(f.parse().map_err(|_| bad())?)),
            ["cred", f, level] => {
                let level: f64 = level.parse().map_err(|_| bad())?;
                if !(level > 0.0 && level < 1.0) {
                    return Err(bad());
                }
                Ok(EstimatorSpec::Credible(f.parse().map_err(|_| bad())?, level))
            }
            _ => Err(bad()),
        }
    }
}

/// `log(exp(a) - exp(b))` for `a > b`.
#[inline]
fn log_diff_exp(a: f64, b: f64) -> f64 {
    a + (-(b - a).exp()).ln_1p()
}

pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Unnormalised log weights `loglike_i + log(X_{i-1} - X_i)` with `X_0 = 1`.
pub(crate) fn log_weight_terms(loglikes: &[f64], logx: &[f64]) -> Result<Vec<f64>> {
    if loglikes.len() != logx.len() {
        return Err(Error::LengthMismatch {
            expected: loglikes.len(),
            found: logx.len(),
        });
    }
    let mut prev = 0.0;
    loglikes
        .iter()
        .zip(logx)
        .enumerate()
        .map(|(i, (&ll, &lx))| {
            if !(lx < prev) {
                return Err(Error::NonMonotonicLogX { index: i });
            }
            if !ll.is_finite() {
                return Err(Error::NonFinite { index: i, value: ll });
            }
            let term = ll + log_diff_exp(prev, lx);
            prev = lx;
            Ok(term)
        })
        .collect()
}

fn normalise(terms: &[f64]) -> Vec<f64> {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratios: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = ratios.iter().sum();
    ratios.into_iter().map(|r| r / total).collect()
}

pub(crate) fn weights_from_parts(loglikes: &[f64], logx: &[f64]) -> Result<Vec<f64>> {
    Ok(normalise(&log_weight_terms(loglikes, logx)?))
}

/// Normalised posterior weights `w_i ∝ L_i (X_{i-1} - X_i)`.
pub fn importance_weights(run: &NsRun, logx: &[f64]) -> Result<Vec<f64>> {
    Ok(normalise(&log_weight_terms(&run.loglikes(), logx)?))
}

/// `log sum_i L_i (X_{i-1} - X_i)`.
pub fn log_evidence(run: &NsRun, logx: &[f64]) -> Result<f64> {
    Ok(logsumexp(&log_weight_terms(&run.loglikes(), logx)?))
}

/// Smallest value whose cumulative weight (values sorted ascending)
/// reaches `level`.
pub fn weighted_quantile(values: &[f64], weights: &[f64], level: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i] / total;
        if cum >= level {
            return values[i];
        }
    }
    // rounding can leave the final cumulative sum a hair under 1
    values[*order.last().expect("non-empty")]
}

/// Evaluates an estimator from log-likelihoods, function values and log X.
/// `fvals` is ignored for the log-evidence.
pub(crate) fn estimate_parts(
    loglikes: &[f64],
    fvals: &[f64],
    logx: &[f64],
    spec: &EstimatorSpec,
) -> Result<f64> {
    let terms = log_weight_terms(loglikes, logx)?;
    if let EstimatorSpec::LogEvidence = spec {
        return Ok(logsumexp(&terms));
    }
    let w = normalise(&terms);
    Ok(match spec {
        EstimatorSpec::LogEvidence => unreachable!(),
        EstimatorSpec::Mean(_) => w.iter().zip(fvals).map(|(w, f)| w * f).sum(),
        EstimatorSpec::SecondMoment(_) => w.iter().zip(fvals).map(|(w, f)| w * f * f).sum(),
        EstimatorSpec::Median(_) => weighted_quantile(fvals, &w, 0.5),
        EstimatorSpec::Credible(_, level) => weighted_quantile(fvals, &w, *level),
    })
}

/// Function values needed by `spec` (empty for the log-evidence).
pub(crate) fn spec_values(run: &NsRun, spec: &EstimatorSpec) -> Result<Vec<f64>> {
    match spec.function() {
        Some(f) => f.values(run),
        None => Ok(Vec::new()),
    }
}

/// Evaluates `spec` on `run` with the given log X coordinates.
pub fn estimate(run: &NsRun, logx: &[f64], spec: &EstimatorSpec) -> Result<f64> {
    let fvals = spec_values(run, spec)?;
    estimate_parts(&run.loglikes(), &fvals, logx, spec)
}
