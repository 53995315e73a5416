//! Python bindings: runs, samplers, estimators and the error-budget and
//! thread-test diagnostics.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nsdiag::io::{read_dead_birth_file, read_native_file, write_native_file, DEFAULT_PRIOR_SENTINEL};
use nsdiag::{
    EstimatorSpec, LikelihoodSpec, NsRun, SamplePoint, SamplerKind, SamplerSettings,
};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(nsdiag, NsdiagError, PyException);

fn py_err(e: nsdiag::Error) -> PyErr {
    NsdiagError::new_err(e.to_string())
}

fn spec(s: &str) -> PyResult<EstimatorSpec> {
    s.parse().map_err(py_err)
}

/// A nested sampling run: dead points sorted by log-likelihood, each with
/// its birth contour.
#[pyclass(name = "Run", module = "nsdiag", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRun {
    inner: NsRun,
}

#[pymethods]
impl PyRun {
    /// Builds a run from parameter rows, log-likelihoods and birth contours
    /// (`float("-inf")` for prior draws). Points may be in any order.
    #[new]
    #[pyo3(signature = (params, loglikes, births, meta = None))]
    fn new(
        params: Vec<Vec<f64>>,
        loglikes: Vec<f64>,
        births: Vec<f64>,
        meta: Option<BTreeMap<String, String>>,
    ) -> PyResult<Self> {
        if params.len() != loglikes.len() || births.len() != loglikes.len() {
            return Err(py_err(nsdiag::Error::LengthMismatch {
                expected: loglikes.len(),
                found: if params.len() != loglikes.len() { params.len() } else { births.len() },
            }));
        }
        let points = params
            .into_iter()
            .zip(loglikes)
            .zip(births)
            .map(|((p, l), b)| SamplePoint::new(p, l, b))
            .collect();
        let inner = NsRun::from_points(points, meta.unwrap_or_default()).map_err(py_err)?;
        Ok(PyRun { inner })
    }

    /// Reads a run in the native text format.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyRun { inner: read_native_file(&path).map_err(py_err)? })
    }

    /// Reads a dead-birth text file.
    #[staticmethod]
    #[pyo3(signature = (path, prior_sentinel = None))]
    fn read_dead_birth(path: PathBuf, prior_sentinel: Option<f64>) -> PyResult<Self> {
        Ok(PyRun { inner: read_dead_birth_file(&path, prior_sentinel).map_err(py_err)? })
    }

    /// Writes the run in the native text format.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_native_file(&path, &self.inner).map_err(py_err)
    }

    /// Native-format text.
    fn to_native(&self) -> PyResult<String> {
        nsdiag::write_native(&self.inner).map_err(py_err)
    }

    #[staticmethod]
    fn from_native(text: &str) -> PyResult<Self> {
        Ok(PyRun { inner: nsdiag::read_native(text).map_err(py_err)? })
    }

    /// Dead-birth text with prior births written as `prior_sentinel`.
    #[pyo3(signature = (prior_sentinel = DEFAULT_PRIOR_SENTINEL))]
    fn to_dead_birth(&self, prior_sentinel: f64) -> PyResult<String> {
        nsdiag::write_dead_birth(&self.inner, prior_sentinel).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Run(points={}, dim={}, threads={})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.n_threads()
        )
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_threads(&self) -> usize {
        self.inner.n_threads()
    }

    #[getter]
    fn loglikes(&self) -> Vec<f64> {
        self.inner.loglikes()
    }

    #[getter]
    fn births(&self) -> Vec<f64> {
        self.inner.points().iter().map(|p| p.birth_loglike).collect()
    }

    #[getter]
    fn params(&self) -> Vec<Vec<f64>> {
        self.inner.points().iter().map(|p| p.params.clone()).collect()
    }

    #[getter]
    fn nlive(&self) -> Vec<u32> {
        self.inner.nlive().to_vec()
    }

    #[getter]
    fn thread_labels(&self) -> Vec<usize> {
        self.inner.thread_labels().to_vec()
    }

    #[getter]
    fn meta(&self) -> BTreeMap<String, String> {
        self.inner.meta().clone()
    }

    /// Expected log X at each dead point.
    fn logx(&self) -> Vec<f64> {
        nsdiag::logx_expected(&self.inner)
    }

    /// Normalised posterior weights.
    fn weights(&self) -> PyResult<Vec<f64>> {
        nsdiag::importance_weights(&self.inner, &nsdiag::logx_expected(&self.inner)).map_err(py_err)
    }

    /// Evaluates an estimator such as `"logz"`, `"mean:t1"` or `"median:r"`.
    fn estimate(&self, estimator: &str) -> PyResult<f64> {
        let logx = nsdiag::logx_expected(&self.inner);
        nsdiag::estimate(&self.inner, &logx, &spec(estimator)?).map_err(py_err)
    }

    /// Single-thread runs, one per thread.
    fn threads(&self) -> PyResult<Vec<PyRun>> {
        Ok(nsdiag::decompose_threads(&self.inner)
            .map_err(py_err)?
            .into_iter()
            .map(|t| PyRun { inner: t.run })
            .collect())
    }

    /// One bootstrap replication: threads drawn with replacement.
    fn bootstrap(&self, seed: u64) -> PyResult<PyRun> {
        Ok(PyRun { inner: nsdiag::bootstrap_run(&self.inner, seed).map_err(py_err)? })
    }

    /// Estimator values over `n_boot` bootstrap replications.
    #[pyo3(signature = (estimator, n_boot = 200, seed = 0))]
    fn bootstrap_values(&self, estimator: &str, n_boot: usize, seed: u64) -> PyResult<Vec<f64>> {
        Ok(nsdiag::bootstrap_values(&self.inner, &spec(estimator)?, n_boot, seed)
            .map_err(py_err)?
            .values)
    }

    /// Standard deviation of the bootstrap values.
    #[pyo3(signature = (estimator, n_boot = 200, seed = 0))]
    fn bootstrap_std(&self, estimator: &str, n_boot: usize, seed: u64) -> PyResult<f64> {
        let sample = nsdiag::bootstrap_values(&self.inner, &spec(estimator)?, n_boot, seed).map_err(py_err)?;
        nsdiag::bootstrap_std(&sample).map_err(py_err)
    }

    /// Problems found in the run, as strings; empty when valid.
    fn validate(&self) -> Vec<String> {
        nsdiag::validate_run(&self.inner).iter().map(|v| format!("{v:?}")).collect()
    }
}

fn unwrap_runs(runs: &[PyRef<'_, PyRun>]) -> Vec<NsRun> {
    runs.iter().map(|r| r.inner.clone()).collect()
}

fn settings(nlive: usize, num_repeats: usize, termination_frac: f64, seed: u64) -> SamplerSettings {
    SamplerSettings::new(nlive, seed)
        .with_num_repeats(num_repeats)
        .with_termination_frac(termination_frac)
}

/// Exact nested sampling of the spherical unit Gaussian in `dim` dimensions.
#[pyfunction]
#[pyo3(signature = (dim, nlive = 250, seed = 0, termination_frac = 1e-3))]
fn perfect_ns_gaussian(py: Python<'_>, dim: usize, nlive: usize, seed: u64, termination_frac: f64) -> PyResult<PyRun> {
    let s = settings(nlive, 1, termination_frac, seed);
    let inner = py.detach(|| nsdiag::perfect_ns_gaussian(dim, &s)).map_err(py_err)?;
    Ok(PyRun { inner })
}

/// Slice-sampling nested sampling of a built-in likelihood given as
/// `"gaussian(d)"` or `"loggamma_mix(d)"`.
#[pyfunction]
#[pyo3(signature = (likelihood, nlive = 250, num_repeats = 10, seed = 0, termination_frac = 1e-3))]
fn slice_ns(
    py: Python<'_>,
    likelihood: &str,
    nlive: usize,
    num_repeats: usize,
    seed: u64,
    termination_frac: f64,
) -> PyResult<PyRun> {
    let like: LikelihoodSpec = likelihood.parse().map_err(py_err)?;
    let s = settings(nlive, num_repeats, termination_frac, seed);
    let inner = py.detach(|| nsdiag::slice_ns(&like, &s)).map_err(py_err)?;
    Ok(PyRun { inner })
}

/// `n_runs` independent runs in parallel; run `i` gets a seed derived
/// from `seed` and `i`.
#[pyfunction]
#[pyo3(signature = (sampler, likelihood, n_runs, nlive = 250, num_repeats = 10, seed = 0, termination_frac = 1e-3))]
#[allow(clippy::too_many_arguments)]
fn generate_runs(
    py: Python<'_>,
    sampler: &str,
    likelihood: &str,
    n_runs: usize,
    nlive: usize,
    num_repeats: usize,
    seed: u64,
    termination_frac: f64,
) -> PyResult<Vec<PyRun>> {
    let kind: SamplerKind = sampler.parse().map_err(py_err)?;
    let like: LikelihoodSpec = likelihood.parse().map_err(py_err)?;
    let s = settings(nlive, num_repeats, termination_frac, seed);
    let runs = py.detach(|| nsdiag::generate_runs(kind, like, s, n_runs)).map_err(py_err)?;
    Ok(runs.into_iter().map(|inner| PyRun { inner }).collect())
}

/// Merges runs into one.
#[pyfunction]
fn combine_runs(runs: Vec<PyRef<'_, PyRun>>) -> PyResult<PyRun> {
    Ok(PyRun { inner: nsdiag::combine_runs(&unwrap_runs(&runs)).map_err(py_err)? })
}

fn measured<'py>(py: Python<'py>, m: nsdiag::Measured) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", m.value)?;
    d.set_item("unc", m.unc)?;
    Ok(d)
}

/// Error budget of one estimator over a set of runs, as a dict of
/// `{"value", "unc"}` entries plus per-run values.
#[pyfunction]
#[pyo3(signature = (runs, estimator, n_boot = 200, seed = 0, true_value = None))]
fn error_budget<'py>(
    py: Python<'py>,
    runs: Vec<PyRef<'py, PyRun>>,
    estimator: &str,
    n_boot: usize,
    seed: u64,
    true_value: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let runs = unwrap_runs(&runs);
    let spec = spec(estimator)?;
    let b = py
        .detach(|| nsdiag::error_budget(&runs, &spec, n_boot, seed, true_value))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("estimator", b.estimator.to_string())?;
    d.set_item("n_runs", b.n_runs)?;
    d.set_item("true_value", b.true_value)?;
    d.set_item("mean", measured(py, b.mean)?)?;
    d.set_item("sigma_values", measured(py, b.sigma_values)?)?;
    d.set_item("sigma_bs", measured(py, b.sigma_bs)?)?;
    d.set_item("sigma_imp", measured(py, b.sigma_imp)?)?;
    d.set_item("imp_fraction", measured(py, b.imp_fraction)?)?;
    for (key, m) in [
        ("rmse", b.rmse),
        ("sigma_imp_rmse", b.sigma_imp_rmse),
        ("imp_rmse_fraction", b.imp_rmse_fraction),
    ] {
        match m {
            Some(m) => d.set_item(key, measured(py, m)?)?,
            None => d.set_item(key, py.None())?,
        }
    }
    d.set_item("run_values", b.run_values)?;
    d.set_item("run_bs_std", b.run_bs_std)?;
    Ok(d)
}

/// Two-sample KS test between the per-thread estimates of two runs;
/// returns `(statistic, p_value)`.
#[pyfunction]
fn thread_ks_test(run1: PyRef<'_, PyRun>, run2: PyRef<'_, PyRun>, estimator: &str) -> PyResult<(f64, f64)> {
    let r = nsdiag::thread_ks_test(&run1.inner, &run2.inner, &spec(estimator)?).map_err(py_err)?;
    Ok((r.ks_statistic, r.p_value.unwrap_or(f64::NAN)))
}

/// KS statistic between the bootstrap distributions of two runs.
#[pyfunction]
#[pyo3(signature = (run1, run2, estimator, n_boot = 200, seed = 0))]
fn bootstrap_distance(
    run1: PyRef<'_, PyRun>,
    run2: PyRef<'_, PyRun>,
    estimator: &str,
    n_boot: usize,
    seed: u64,
) -> PyResult<f64> {
    let r = nsdiag::bootstrap_distance(&run1.inner, &run2.inner, &spec(estimator)?, n_boot, seed).map_err(py_err)?;
    Ok(r.ks_statistic)
}

#[pyfunction]
fn ks_statistic(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    nsdiag::ks_statistic(&a, &b).map_err(py_err)
}

#[pyfunction]
fn ks_pvalue(d: f64, n1: usize, n2: usize) -> PyResult<f64> {
    nsdiag::ks_pvalue(d, n1, n2).map_err(py_err)
}

#[pyfunction]
fn sigma_imp(sigma_values: f64, sigma_bs: f64) -> PyResult<f64> {
    nsdiag::sigma_imp(sigma_values, sigma_bs).map_err(py_err)
}

#[pyfunction]
fn imp_fraction(sigma_values: f64, sigma_bs: f64) -> PyResult<f64> {
    nsdiag::imp_fraction(sigma_values, sigma_bs).map_err(py_err)
}

/// Analytic log-evidence of the unit Gaussian in the default prior box.
#[pyfunction]
fn true_logz(dim: usize) -> f64 {
    nsdiag::true_logz(dim)
}

#[pymodule]
#[pyo3(name = "nsdiag")]
fn nsdiag_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NsdiagError", m.py().get_type::<NsdiagError>())?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(perfect_ns_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(slice_ns, m)?)?;
    m.add_function(wrap_pyfunction!(generate_runs, m)?)?;
    m.add_function(wrap_pyfunction!(combine_runs, m)?)?;
    m.add_function(wrap_pyfunction!(error_budget, m)?)?;
    m.add_function(wrap_pyfunction!(thread_ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_distance, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(ks_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_imp, m)?)?;
    m.add_function(wrap_pyfunction!(imp_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(true_logz, m)?)?;
    Ok(())
}
