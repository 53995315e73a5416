//! Data behind the two diagnostic diagrams: bootstrap uncertainty bands on
//! one-dimensional posteriors, and log X diagrams (relative posterior mass,
//! parameter scatter against log X, log X uncertainty and thread traces).

use std::fmt::Write as _;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{importance_weights, weights_from_parts, ParamFunction};
use crate::resampling::{scott_bandwidth, weighted_kde, Resampler};
use crate::rng::{derive_seed, substream};
use crate::run::{logx_expected, simulate_logx, NsRun};

/// Probability masses of the 1, 2 and 3 sigma bands.
pub const BAND_MASSES: [f64; 3] = [0.6827, 0.9545, 0.9973];
pub const DEFAULT_GRID_POINTS: usize = 256;
pub const MASS_CURVE_POINTS: usize = 256;
/// Fewest simulations accepted for per-point log X intervals.
pub const MIN_LOGX_SIMULATIONS: usize = 100;
/// Points whose weight is below this fraction of the largest weight do not
/// count towards the default grid range.
const NEGLIGIBLE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BandLevel {
    pub mass: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Pointwise central-quantile bands of the pdf over bootstrap replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourBand {
    pub run_id: String,
    pub function: String,
    pub grid: Vec<f64>,
    /// Pointwise median pdf across replications.
    pub centre: Vec<f64>,
    /// One entry per [`BAND_MASSES`] value, innermost first.
    pub levels: Vec<BandLevel>,
}

impl ContourBand {
    /// True when every band lies within the next wider one.
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|pair| {
            let (inner, outer) = (&pair[0], &pair[1]);
            (0..self.grid.len()).all(|i| {
                outer.lower[i] <= inner.lower[i]
                    && inner.lower[i] <= inner.upper[i]
                    && inner.upper[i] <= outer.upper[i]
            })
        })
    }

    /// Grid value where the band centre peaks.
    pub fn centre_argmax(&self) -> f64 {
        let i = (0..self.centre.len())
            .max_by(|&a, &b| self.centre[a].total_cmp(&self.centre[b]))
            .unwrap_or(0);
        self.grid[i]
    }

    /// Number of grid points at which the two bands at `level` do not
    /// overlap. Both bands must share a grid.
    pub fn disjoint_points(&self, other: &ContourBand, level: usize) -> Result<usize> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("bands are on different grids".into()));
        }
        let (a, b) = match (self.levels.get(level), other.levels.get(level)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidArgument(format!("no band level {level}"))),
        };
        Ok((0..self.grid.len())
            .filter(|&i| a.upper[i] < b.lower[i] || b.upper[i] < a.lower[i])
            .count())
    }

    pub const CSV_HEADER: &'static str = "x,centre,lower_1sigma,upper_1sigma,lower_2sigma,upper_2sigma,lower_3sigma,upper_3sigma";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.grid.len() {
            let _ = write!(out, "{},{}", self.grid[i], self.centre[i]);
            for level in &self.levels {
                let _ = write!(out, ",{},{}", level.lower[i], level.upper[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Layered filled bands with the centre line on top.
    pub fn to_svg(&self) -> String {
        let ymax = self
            .levels
            .last()
            .map(|l| l.upper.iter().copied().fold(0.0, f64::max))
            .unwrap_or(0.0);
        let frame = Frame::new(&self.grid, 0.0, ymax);
        let mut body = String::new();
        let shades = ["#c6dbef", "#6baed6", "#2171b5"];
        for (level, shade) in self.levels.iter().rev().zip(shades) {
            let mut pts: Vec<(f64, f64)> = self.grid.iter().copied().zip(level.upper.iter().copied()).collect();
            pts.extend(self.grid.iter().copied().zip(level.lower.iter().copied()).rev());
            let _ = writeln!(
                body,
                r#"<polygon fill="{shade}" stroke="none" points="{}"/>"#,
                frame.points(&pts)
            );
        }
        let centre: Vec<(f64, f64)> = self.grid.iter().copied().zip(self.centre.iter().copied()).collect();
        let _ = writeln!(
            body,
            r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
            frame.points(&centre)
        );
        svg_document(&format!("{} posterior, run {}", self.function, self.run_id), &body)
    }
}

/// Central quantile with linear interpolation on sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// 256 points spanning the range of the points that carry weight, padded
/// by four Scott bandwidths on each side.
pub fn default_grid(run: &NsRun, f: &ParamFunction) -> Result<Vec<f64>> {
    let values = f.values(run)?;
    let weights = importance_weights(run, &logx_expected(run))?;
    let h = scott_bandwidth(&values, &weights)?;
    let wmax = weights.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = values
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w >= wmax * NEGLIGIBLE_WEIGHT)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| {
            (lo.min(v), hi.max(v))
        });
    Ok(crate::resampling::linspace(lo - 4.0 * h, hi + 4.0 * h, DEFAULT_GRID_POINTS))
}

fn run_label(run: &NsRun, fallback: usize) -> String {
    run.meta()
        .get("id")
        .cloned()
        .unwrap_or_else(|| fallback.to_string())
}

/// Bootstraps the run `n_boot` times, forms the weighted KDE of `f` for
/// each replication (replication `b` uses seed `derive_seed(seed, b)`),
/// and takes pointwise central quantiles of the pdf values.
pub fn posterior_uncertainty_band(
    run: &NsRun,
    f: &ParamFunction,
    grid: Option<&[f64]>,
    n_boot: usize,
    seed: u64,
) -> Result<ContourBand> {
    if n_boot < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 bootstrap replications for a band, got {n_boot}"
        )));
    }
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(run, f)?,
    };
    let values = f.values(run)?;
    let resampler = Resampler::new(run)?;
    let pdfs: Vec<Vec<f64>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let rep = resampler.replicate(derive_seed(seed, b as u64));
            let ll: Vec<f64> = rep.index.iter().map(|&i| resampler.loglikes()[i]).collect();
            let xs: Vec<f64> = rep.index.iter().map(|&i| values[i]).collect();
            let w = weights_from_parts(&ll, &rep.logx)?;
            Ok(weighted_kde(&xs, &w, &grid)?.pdf)
        })
        .collect::<Result<_>>()?;

    let mut centre = Vec::with_capacity(grid.len());
    let mut levels: Vec<BandLevel> = BAND_MASSES
        .iter()
        .map(|&mass| BandLevel {
            mass,
            lower: Vec::with_capacity(grid.len()),
            upper: Vec::with_capacity(grid.len()),
        })
        .collect();
    let mut column = vec![0.0; n_boot];
    for i in 0..grid.len() {
        for (c, pdf) in column.iter_mut().zip(&pdfs) {
            *c = pdf[i];
        }
        column.sort_by(f64::total_cmp);
        centre.push(quantile_sorted(&column, 0.5));
        for level in &mut levels {
            level.lower.push(quantile_sorted(&column, 0.5 * (1.0 - level.mass)));
            level.upper.push(quantile_sorted(&column, 0.5 * (1.0 + level.mass)));
        }
    }
    Ok(ContourBand {
        run_id: run_label(run, 0),
        function: f.to_string(),
        grid,
        centre,
        levels,
    })
}

/// Relative posterior mass `L X` on a uniform log X grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MassCurve {
    pub run_id: String,
    /// Descending, from the first to the last dead point's log X.
    pub logx: Vec<f64>,
    /// Scaled so that the largest value at a dead point is 1.
    pub mass: Vec<f64>,
    /// `log(L X)` corresponding to a mass of 1.
    pub log_norm: f64,
}

impl MassCurve {
    /// `log ∫ L X dlog X` over the grid (trapezoid rule), which
    /// approximates the log-evidence.
    pub fn log_integral(&self) -> f64 {
        let area: f64 = self
            .logx
            .windows(2)
            .zip(self.mass.windows(2))
            .map(|(x, m)| 0.5 * (x[0] - x[1]) * (m[0] + m[1]))
            .sum();
        area.ln() + self.log_norm
    }
}

/// Evaluates `log(L_i X̂_i)` at every dead point, normalises the maximum to
/// 1 and interpolates linearly in log mass onto `n_grid` log X values.
pub fn posterior_mass_curve(run: &NsRun, n_grid: usize) -> Result<MassCurve> {
    if n_grid < 2 {
        return Err(Error::InvalidArgument("mass curve needs at least 2 grid points".into()));
    }
    if run.is_empty() {
        return Err(Error::EmptyRun);
    }
    let logx = logx_expected(run);
    let logm: Vec<f64> = run.points().iter().zip(&logx).map(|(p, lx)| p.loglike + lx).collect();
    let norm = logm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (first, last) = (logx[0], logx[logx.len() - 1]);
    let grid = crate::resampling::linspace(first, last, n_grid);
    let mut j = 0;
    let mass = grid
        .iter()
        .map(|&g| {
            while j + 2 < logx.len() && logx[j + 1] > g {
                j += 1;
            }
            let value = if logx.len() == 1 {
                logm[0]
            } else {
                let (x0, x1) = (logx[j], logx[j + 1]);
                let t = ((x0 - g) / (x0 - x1)).clamp(0.0, 1.0);
                logm[j] + t * (logm[j + 1] - logm[j])
            };
            (value - norm).exp()
        })
        .collect();
    Ok(MassCurve {
        run_id: run_label(run, 0),
        logx: grid,
        mass,
        log_norm: norm,
    })
}

/// Ordered `(log X̂, f)` pairs along one thread, placed at the parent run's
/// log X̂ coordinates.
pub fn thread_trace(run: &NsRun, thread_index: usize, f: &ParamFunction) -> Result<Vec<(f64, f64)>> {
    if thread_index >= run.n_threads() {
        return Err(Error::InvalidArgument(format!(
            "thread {thread_index} out of range for a run with {} threads",
            run.n_threads()
        )));
    }
    f.check_dim(run.dim())?;
    let logx = logx_expected(run);
    Ok(run
        .points()
        .iter()
        .zip(run.thread_labels())
        .zip(&logx)
        .filter(|((_, &label), _)| label == thread_index)
        .map(|((p, _), &lx)| (lx, f.eval(&p.params)))
        .collect())
}

/// Parameter values of one run against log X̂.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSeries {
    pub run_id: String,
    pub function: String,
    /// Descending.
    pub logx: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    /// 1 sigma central interval of simulated log X per point, if requested.
    pub logx_interval: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreadTrace {
    pub run_id: String,
    pub function: String,
    pub thread: usize,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogXDiagram {
    pub mass_curves: Vec<MassCurve>,
    pub scatter: Vec<ScatterSeries>,
    pub traces: Vec<ThreadTrace>,
}

/// Assembles log X diagram data for several runs sharing axes.
///
/// `n_sim = 0` skips the per-point log X intervals; otherwise at least
/// [`MIN_LOGX_SIMULATIONS`] are required. Run `r` draws its simulations
/// with seed `derive_seed(seed, r)` and its traced threads from
/// `substream(seed, r)`.
pub fn logx_diagram(
    runs: &[NsRun],
    fns: &[ParamFunction],
    n_sim: usize,
    traces_per_run: usize,
    seed: u64,
) -> Result<LogXDiagram> {
    if n_sim > 0 && n_sim < MIN_LOGX_SIMULATIONS {
        return Err(Error::InvalidArgument(format!(
            "log X intervals need at least {MIN_LOGX_SIMULATIONS} simulations, got {n_sim}"
        )));
    }
    let mut diagram = LogXDiagram {
        mass_curves: Vec::new(),
        scatter: Vec::new(),
        traces: Vec::new(),
    };
    for (r, run) in runs.iter().enumerate() {
        for f in fns {
            f.check_dim(run.dim())?;
        }
        let id = run_label(run, r);
        let mut curve = posterior_mass_curve(run, MASS_CURVE_POINTS)?;
        curve.run_id = id.clone();
        diagram.mass_curves.push(curve);

        let logx = logx_expected(run);
        let weights = importance_weights(run, &logx)?;
        let interval = if n_sim > 0 {
            let sims = simulate_logx(run, n_sim, derive_seed(seed, r as u64))?;
            let mut column = vec![0.0; n_sim];
            Some(
                (0..run.len())
                    .map(|i| {
                        for (c, row) in column.iter_mut().zip(&sims) {
                            *c = row[i];
                        }
                        column.sort_by(f64::total_cmp);
                        (
                            quantile_sorted(&column, 0.5 * (1.0 - BAND_MASSES[0])),
                            quantile_sorted(&column, 0.5 * (1.0 + BAND_MASSES[0])),
                        )
                    })
                    .collect::<Vec<_>>(),
            )
        } else {
            None
        };
        for f in fns {
            diagram.scatter.push(ScatterSeries {
                run_id: id.clone(),
                function: f.to_string(),
                logx: logx.clone(),
                values: run.points().iter().map(|p| f.eval(&p.params)).collect(),
                weights: weights.clone(),
                logx_interval: interval.clone(),
            });
        }

        let k = traces_per_run.min(run.n_threads());
        let mut rng = substream(seed, r as u64);
        let mut chosen = sample(&mut rng, run.n_threads(), k).into_vec();
        chosen.sort_unstable();
        for f in fns {
            for &t in &chosen {
                diagram.traces.push(ThreadTrace {
                    run_id: id.clone(),
                    function: f.to_string(),
                    thread: t,
                    points: thread_trace(run, t, f)?,
                });
            }
        }
    }
    Ok(diagram)
}

/// Largest relative standard deviation of `values` among points whose
/// log X̂ lies within `width / 2` of some point's log X̂.
///
/// In the constant-`nlive` body of a run a width of 1 covers about `nlive`
/// consecutive points. `logx` must be descending.
pub fn relative_spread(logx: &[f64], values: &[f64], width: f64) -> f64 {
    let half = 0.5 * width;
    let (mut lo, mut hi) = (0, 0);
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut worst = 0.0f64;
    for i in 0..logx.len() {
        while hi < logx.len() && logx[hi] >= logx[i] - half {
            s1 += values[hi];
            s2 += values[hi] * values[hi];
            hi += 1;
        }
        while logx[lo] > logx[i] + half {
            s1 -= values[lo];
            s2 -= values[lo] * values[lo];
            lo += 1;
        }
        let n = (hi - lo) as f64;
        if n >= 2.0 {
            let mean = s1 / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            worst = worst.max(var.sqrt() / mean.abs());
        }
    }
    worst
}

impl LogXDiagram {
    pub const MASS_CSV_HEADER: &'static str = "run,logx,mass";
    pub const SCATTER_CSV_HEADER: &'static str = "run,function,logx,value,weight,logx_lower,logx_upper";
    pub const TRACE_CSV_HEADER: &'static str = "run,function,thread,logx,value";

    pub fn mass_csv(&self) -> String {
        let mut out = format!("{}\n", Self::MASS_CSV_HEADER);
        for c in &self.mass_curves {
            for (x, m) in c.logx.iter().zip(&c.mass) {
                let _ = writeln!(out, "{},{},{}", c.run_id, x, m);
            }
        }
        out
    }

    pub fn scatter_csv(&self) -> String {
        let mut out = format!("{}\n", Self::SCATTER_CSV_HEADER);
        for s in &self.scatter {
            for i in 0..s.logx.len() {
                let (lo, hi) = match &s.logx_interval {
                    Some(iv) => (iv[i].0.to_string(), iv[i].1.to_string()),
                    None => (String::new(), String::new()),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    s.run_id, s.function, s.logx[i], s.values[i], s.weights[i], lo, hi
                );
            }
        }
        out
    }

    pub fn traces_csv(&self) -> String {
        let mut out = format!("{}\n", Self::TRACE_CSV_HEADER);
        for t in &self.traces {
            for (x, v) in &t.points {
                let _ = writeln!(out, "{},{},{},{},{}", t.run_id, t.function, t.thread, x, v);
            }
        }
        out
    }

    /// One panel per function: scatter with traces overlaid, and the mass
    /// curves in a strip underneath sharing the log X axis.
    pub fn to_svg(&self, function: &str) -> String {
        let series: Vec<&ScatterSeries> = self.scatter.iter().filter(|s| s.function == function).collect();
        let all_x: Vec<f64> = series.iter().flat_map(|s| s.logx.iter().copied()).collect();
        let (ymin, ymax) = series
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if all_x.is_empty() {
            return svg_document(function, "");
        }
        let frame = Frame::new(&all_x, ymin, ymax);
        let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];
        let mut body = String::new();
        for (k, s) in series.iter().enumerate() {
            let colour = palette[k % palette.len()];
            for (x, v) in s.logx.iter().zip(&s.values) {
                let (px, py) = frame.map(*x, *v);
                let _ = writeln!(body, r#"<circle cx="{px:.2}" cy="{py:.2}" r="0.6" fill="{colour}"/>"#);
            }
        }
        for t in self.traces.iter().filter(|t| t.function == function) {
            let _ = writeln!(
                body,
                r#"<polyline fill="none" stroke="black" stroke-width="0.8" points="{}"/>"#,
                frame.points(&t.points)
            );
        }
        let strip = Frame {
            y_top: 330.0,
            y_bottom: 390.0,
            ..Frame::new(&all_x, 0.0, 1.0)
        };
        for (k, c) in self.mass_curves.iter().enumerate() {
            let pts: Vec<(f64, f64)> = c.logx.iter().copied().zip(c.mass.iter().copied()).collect();
            let _ = writeln!(
                body,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
                palette[k % palette.len()],
                strip.points(&pts)
            );
        }
        svg_document(&format!("{function} against log X"), &body)
    }
}

/// Maps data coordinates onto a fixed 600x400 canvas.
struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
    y_top: f64,
    y_bottom: f64,
}

impl Frame {
    fn new(xs: &[f64], y_lo: f64, y_hi: f64) -> Self {
        let (x_lo, x_hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        Frame {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            y_top: 30.0,
            y_bottom: 310.0,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = if self.x_hi > self.x_lo { (x - self.x_lo) / (self.x_hi - self.x_lo) } else { 0.5 };
        let sy = if self.y_hi > self.y_lo { (y - self.y_lo) / (self.y_hi - self.y_lo) } else { 0.5 };
        (50.0 + 530.0 * sx, self.y_bottom - (self.y_bottom - self.y_top) * sy)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| {
                let (px, py) = self.map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn svg_document(title: &str, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"400\" viewBox=\"0 0 600 400\">\n\
         <title>{}</title>\n<rect width=\"600\" height=\"400\" fill=\"white\"/>\n{}</svg>\n",
        title.replace('&', "&amp;").replace('<', "&lt;"),
        body
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::{Meta, SamplePoint};
    use crate::sampler::{perfect_ns_gaussian, SamplerSettings};

    const NEG_INF: f64 = f64::NEG_INFINITY;

    fn gaussian_run(d: usize, nlive: usize, seed: u64) -> NsRun {
        perfect_ns_gaussian(d, &SamplerSettings::new(nlive, seed)).unwrap()
    }

    #[test]
    fn identical_threads_collapse_bands() {
        // two threads with identical parameter values
        let pts = vec![
            SamplePoint::new(vec![0.5], 1.0, NEG_INF),
            SamplePoint::new(vec![0.5], 2.0, NEG_INF),
        ];
        let run = NsRun::from_points(pts, Meta::new()).unwrap();
        let grid = crate::resampling::linspace(-3.0, 3.0, 61);
        let band = posterior_uncertainty_band(&run, &ParamFunction::Coordinate(0), Some(&grid), 20, 1).unwrap();
        for level in &band.levels {
            for i in 0..grid.len() {
                assert!((level.upper[i] - level.lower[i]).abs() < 1e-12);
            }
        }
        assert!(band.is_nested());
    }

    #[test]
    fn gaussian_band_is_centred_and_nested() {
        let run = gaussian_run(3, 100, 2);
        let band = posterior_uncertainty_band(&run, &ParamFunction::Coordinate(0), None, 50, 3).unwrap();
        assert_eq!(band.grid.len(), DEFAULT_GRID_POINTS);
        assert!(band.is_nested());
        assert!(band.centre_argmax().abs() < 0.3, "{}", band.centre_argmax());
        assert!(posterior_uncertainty_band(&run, &ParamFunction::Coordinate(0), None, 9, 3).is_err());
    }

    #[test]
    fn mass_curve_of_constant_likelihood() {
        let pts: Vec<SamplePoint> = (0..5)
            .map(|i| SamplePoint::new(vec![0.0], 1.0 + 1e-9 * i as f64, NEG_INF))
            .collect();
        let run = NsRun::from_points(pts, Meta::new()).unwrap();
        let c = posterior_mass_curve(&run, 9).unwrap();
        assert!((c.mass[0] - 1.0).abs() < 1e-6);
        assert!(c.mass.windows(2).all(|m| m[1] < m[0]));
        assert!(c.logx.windows(2).all(|x| x[1] < x[0]));
        assert!(posterior_mass_curve(&run, 1).is_err());
    }

    #[test]
    fn mass_curve_peak_and_integral() {
        let run = gaussian_run(10, 100, 4);
        let c = posterior_mass_curve(&run, 2000).unwrap();
        let imax = (0..c.mass.len()).max_by(|&a, &b| c.mass[a].total_cmp(&c.mass[b])).unwrap();
        assert!((c.logx[imax] + 27.0).abs() < 3.0, "peak at {}", c.logx[imax]);
        assert!(imax > 0 && imax < c.mass.len() - 1);
        let logz = crate::estimators::log_evidence(&run, &logx_expected(&run)).unwrap();
        assert!((c.log_integral() - logz).abs() < 0.02, "{} vs {logz}", c.log_integral());
    }

    #[test]
    fn traces_and_scatter() {
        let run = gaussian_run(2, 20, 5);
        let f = ParamFunction::Radial;
        let t = thread_trace(&run, 3, &f).unwrap();
        assert!(t.windows(2).all(|w| w[1].0 < w[0].0));
        assert!(thread_trace(&run, 20, &f).is_err());
        let total: usize = (0..20).map(|k| thread_trace(&run, k, &f).unwrap().len()).sum();
        assert_eq!(total, run.len());

        let d = logx_diagram(std::slice::from_ref(&run), std::slice::from_ref(&f), 200, 2, 7).unwrap();
        assert_eq!(d.traces.len(), 2);
        let s = &d.scatter[0];
        assert!(s.logx.windows(2).all(|w| w[1] < w[0]));
        let iv = s.logx_interval.as_ref().unwrap();
        assert!(iv.iter().zip(&s.logx).all(|((lo, hi), _)| lo < hi));
        assert_eq!(d, logx_diagram(std::slice::from_ref(&run), std::slice::from_ref(&f), 200, 2, 7).unwrap());
        assert!(logx_diagram(&[run], &[f], 50, 1, 7).is_err());
    }

    #[test]
    fn single_point_scatter() {
        let run = NsRun::from_points(vec![SamplePoint::new(vec![2.0], 1.0, NEG_INF)], Meta::new()).unwrap();
        let d = logx_diagram(&[run], &[ParamFunction::Coordinate(0)], 0, 1, 0).unwrap();
        assert_eq!(d.scatter[0].logx, vec![-1.0]);
        assert_eq!(d.traces[0].points, vec![(-1.0, 2.0)]);
    }

    #[test]
    fn single_thread_trace_is_full_scatter() {
        let pts = vec![
            SamplePoint::new(vec![1.0], 1.0, NEG_INF),
            SamplePoint::new(vec![2.0], 2.0, 1.0),
            SamplePoint::new(vec![3.0], 3.0, 2.0),
        ];
        let run = NsRun::from_points(pts, Meta::new()).unwrap();
        let f = ParamFunction::Coordinate(0);
        let trace = thread_trace(&run, 0, &f).unwrap();
        let logx = logx_expected(&run);
        let scatter: Vec<(f64, f64)> = logx.into_iter().zip([1.0, 2.0, 3.0]).collect();
        assert_eq!(trace, scatter);
    }

    #[test]
    fn radial_spread_is_small() {
        let run = gaussian_run(10, 250, 6);
        let r: Vec<f64> = run.points().iter().map(|p| ParamFunction::Radial.eval(&p.params)).collect();
        // constant-nlive body, past the first nat where contours are clipped by the box
        let logx = logx_expected(&run);
        let body = run.len() - 250;
        let start = logx.partition_point(|&x| x > -1.0);
        let spread = relative_spread(&logx[start..body], &r[start..body], 1.0);
        assert!(spread < 0.05, "{spread}");
    }

    #[test]
    fn csv_and_svg_render() {
        let run = gaussian_run(2, 20, 8);
        let band = posterior_uncertainty_band(&run, &ParamFunction::Coordinate(0), None, 10, 1).unwrap();
        let csv = band.to_csv();
        assert!(csv.starts_with(ContourBand::CSV_HEADER));
        assert_eq!(csv.lines().count(), DEFAULT_GRID_POINTS + 1);
        assert!(band.to_svg().contains("<polygon"));
        let d = logx_diagram(&[run], &[ParamFunction::Coordinate(0)], 0, 1, 0).unwrap();
        assert!(d.scatter_csv().lines().nth(1).unwrap().ends_with(",,"));
        assert!(d.to_svg("t1").contains("<circle"));
    }
}
