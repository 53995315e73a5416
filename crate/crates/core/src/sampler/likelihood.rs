//! The two test likelihoods and the box prior they are paired with.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Half-width of the uniform prior box `[-30, 30]^d`.
pub const PRIOR_HALF_WIDTH: f64 = 30.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Uniform prior on a cube centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub half_width: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            half_width: PRIOR_HALF_WIDTH,
        }
    }
}

impl PriorSpec {
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.iter().all(|x| x.abs() <= self.half_width)
    }

    pub fn log_volume(&self, dim: usize) -> f64 {
        dim as f64 * (2.0 * self.half_width).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodSpec {
    /// Unit spherical Gaussian centred on the origin.
    Gaussian { dim: usize },
    /// LogGamma/Gaussian mixture; `dim` must be even.
    LogGammaMix { dim: usize },
}

impl LikelihoodSpec {
    pub fn gaussian(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(LikelihoodSpec::Gaussian { dim })
    }

    pub fn loggamma_mix(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "LogGamma mixture needs an even dimension >= 2, got {dim}"
            )));
        }
        Ok(LikelihoodSpec::LogGammaMix { dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            LikelihoodSpec::Gaussian { dim } | LikelihoodSpec::LogGammaMix { dim } => dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LikelihoodSpec::Gaussian { .. } => "gaussian",
            LikelihoodSpec::LogGammaMix { .. } => "loggamma_mix",
        }
    }

    /// Builds from a name and dimension (as used by the CLI).
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name {
            "gaussian" => Self::gaussian(dim),
            "loggamma_mix" | "loggamma" => Self::loggamma_mix(dim),
            other => Err(Error::InvalidArgument(format!("unknown likelihood {other:?}"))),
        }
    }

    /// Log-likelihood; the caller guarantees `theta.len() == self.dim()`.
    #[inline]
    pub fn loglike(&self, theta: &[f64]) -> f64 {
        match self {
            LikelihoodSpec::Gaussian { .. } => gaussian_unchecked(theta),
            LikelihoodSpec::LogGammaMix { .. } => loggamma_mix_unchecked(theta),
        }
    }
}

impl fmt::Display for LikelihoodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.dim())
    }
}

impl FromStr for LikelihoodSpec {
    type Err = Error;

    /// Accepts `name(dim)` as produced by `Display`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse likelihood {s:?}"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let dim = rest.strip_suffix(')').and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        Self::from_name(name, dim)
    }
}

/// `-d log(60)`: the evidence of a normalised likelihood on the box prior.
pub fn true_logz(dim: usize) -> f64 {
    -(dim as f64) * (2.0 * PRIOR_HALF_WIDTH).ln()
}

fn check_finite(theta: &[f64]) -> Result<()> {
    match theta.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            index: i,
            value: theta[i],
        }),
        None => Ok(()),
    }
}

#[inline]
fn gaussian_unchecked(theta: &[f64]) -> f64 {
    let r2: f64 = theta.iter().map(|x| x * x).sum();
    -(theta.len() as f64) * LN_SQRT_2PI - 0.5 * r2
}

/// `-(d/2) log(2 pi) - |theta|^2 / 2`.
pub fn gaussian_loglike(theta: &[f64]) -> Result<f64> {
    check_finite(theta)?;
    Ok(gaussian_unchecked(theta))
}

/// Log density of `LogGamma(x | alpha, beta)`:
/// `beta x - e^x / alpha - beta log(alpha) - log Gamma(beta)`.
pub fn loggamma_logpdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "LogGamma needs positive alpha and beta, got ({alpha}, {beta})"
        )));
    }
    Ok(beta * x - x.exp() / alpha - beta * alpha.ln() - ln_gamma(beta))
}

/// `LogGamma(x | 1, 1)`.
#[inline]
fn lg11(x: f64) -> f64 {
    x - x.exp()
}

#[inline]
fn unit_normal(x: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * x * x
}

#[inline]
fn half_mixture(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln() - LN_2
}

#[inline]
fn loggamma_mix_unchecked(theta: &[f64]) -> f64 {
    let d = theta.len();
    let lg_end = (d + 2) / 2; // one-based coordinates 3..=lg_end are LogGamma
    theta
        .iter()
        .enumerate()
        .map(|(i, &x)| match i + 1 {
            1 => half_mixture(lg11(x - 10.0), lg11(x + 10.0)),
            2 => half_mixture(unit_normal(x - 10.0), lg11(x + 10.0)),
            k if k <= lg_end => lg11(x),
            _ => unit_normal(x),
        })
        .sum()
}

/// Product over coordinates of the LogGamma/Gaussian mixture densities:
/// coordinate 1 mixes LogGamma modes at +10 and -10, coordinate 2 mixes a
/// unit Normal at +10 with a LogGamma at -10, coordinates 3 to (d+2)/2
/// are LogGamma and the rest unit Normal.
pub fn loggamma_mix_loglike(theta: &[f64]) -> Result<f64> {
    if theta.len() < 2 || !theta.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "LogGamma mixture needs an even dimension >= 2, got {}",
            theta.len()
        )));
    }
    check_finite(theta)?;
    Ok(loggamma_mix_unchecked(theta))
}

/// Log volume of a `dim`-ball of the given radius.
pub fn log_ball_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0) + d * radius.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_examples() {
        let v = gaussian_loglike(&[0.0; 10]).unwrap();
        assert!((v + 5.0 * (2.0 * PI).ln()).abs() < 1e-12);
        assert!((v + 9.189_385_332_046_727).abs() < 1e-12);
        let v = gaussian_loglike(&[1.0, 0.0]).unwrap();
        assert!((v - (-(2.0 * PI).ln() - 0.5)).abs() < 1e-14);
        let a = gaussian_loglike(&[0.3, -1.2, 2.0]).unwrap();
        let b = gaussian_loglike(&[2.0, 1.2, -0.3]).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(gaussian_loglike(&[f64::NAN]).is_err());
    }

    #[test]
    fn loggamma_examples() {
        assert!((loggamma_logpdf(0.0, 1.0, 1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(loggamma_logpdf(-800.0, 1.0, 1.0).unwrap() < -799.0);
        assert!(loggamma_logpdf(0.0, 0.0, 1.0).is_err());
        assert!(loggamma_logpdf(0.0, 1.0, -1.0).is_err());
        // general shape/scale against the closed form
        let v = loggamma_logpdf(0.5, 2.0, 3.0).unwrap();
        let expect = 1.5 - 0.5f64.exp() / 2.0 - 3.0 * 2f64.ln() - 2f64.ln();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn loggamma_integrates_to_one() {
        for (alpha, beta) in [(1.0, 1.0), (2.0, 3.0), (0.5, 0.7)] {
            let (lo, hi, n) = (-60.0, 10.0, 200_000);
            let h = (hi - lo) / n as f64;
            let total: f64 = (0..=n)
                .map(|i| {
                    let x = lo + i as f64 * h;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * loggamma_logpdf(x, alpha, beta).unwrap().exp()
                })
                .sum::<f64>()
                * h;
            assert!((total - 1.0).abs() < 1e-3, "({alpha},{beta}) -> {total}");
        }
    }

    #[test]
    fn mixture_term_by_term() {
        let v = loggamma_mix_loglike(&[10.0, 10.0]).unwrap();
        let c1 = (0.5 * (-1f64).exp()).ln();
        let c2 = (0.5 * (-LN_SQRT_2PI).exp()).ln();
        assert!((v - (c1 + c2)).abs() < 1e-12);
        assert!(loggamma_mix_loglike(&[0.0; 3]).is_err());
        // d = 6: coordinates 3, 4 LogGamma, 5, 6 Normal
        let base = loggamma_mix_loglike(&[10.0, 10.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((base - (c1 + c2 - 2.0 - 2.0 * LN_SQRT_2PI)).abs() < 1e-12);
    }

    #[test]
    fn mixture_has_four_modes() {
        let peak = |a: f64, b: f64| loggamma_mix_loglike(&[a, b]).unwrap();
        for (a, b) in [(10.0, 10.0), (-10.0, 10.0), (10.0, -10.0), (-10.0, -10.0)] {
            assert!(peak(a, b) > peak(0.0, 0.0) + 8.0);
            assert!(peak(a, b) > peak(a + 3.0, b) && peak(a, b) > peak(a, b - 3.0));
        }
    }

    #[test]
    fn mixture_evidence_on_box() {
        // 2-D midpoint quadrature of L / 60^2 over the box
        let n = 3000;
        let h = 60.0 / n as f64;
        let axis: Vec<f64> = (0..n).map(|i| -30.0 + (i as f64 + 0.5) * h).collect();
        let c1: f64 = axis.iter().map(|&x| half_mixture(lg11(x - 10.0), lg11(x + 10.0)).exp()).sum::<f64>() * h;
        let c2: f64 = axis
            .iter()
            .map(|&x| half_mixture(unit_normal(x - 10.0), lg11(x + 10.0)).exp())
            .sum::<f64>()
            * h;
        let logz = (c1 * c2).ln() - 2.0 * 60f64.ln();
        assert!((logz - true_logz(2)).abs() < 1e-4);
    }

    #[test]
    fn true_logz_values() {
        assert!((true_logz(10) + 40.9434).abs() < 1e-4);
        assert!((true_logz(1) + 4.09434).abs() < 1e-5);
        assert!((true_logz(2) + 8.18869).abs() < 1e-5);
    }

    #[test]
    fn names_round_trip() {
        let l = LikelihoodSpec::loggamma_mix(4).unwrap();
        assert_eq!(l.to_string().parse::<LikelihoodSpec>().unwrap(), l);
        assert!(LikelihoodSpec::loggamma_mix(3).is_err());
    }
}
