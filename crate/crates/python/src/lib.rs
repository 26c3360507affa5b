//! Python bindings for the elabc toolkit.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use elabc::el::{self, ConstraintMatrix, Feasibility, SolverOptions};
use elabc::experiments::{self, Method, SummaryChoice};
use elabc::models::Example;
use elabc::pseudolik::{self, EstimatorConfig, PosteriorKernel};
use elabc::rng::Stream;
use elabc::samplers::{self, RwmConfig};

fn py_err(e: elabc::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse_example(name: &str) -> PyResult<Example> {
    name.parse().map_err(py_err)
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Result of the empirical-likelihood optimisation.
#[pyclass(name = "ElSolution", frozen)]
struct PyElSolution {
    #[pyo3(get)]
    weights: Vec<f64>,
    #[pyo3(get)]
    multiplier: Vec<f64>,
    /// `(1/m) sum log w_i`, `-inf` unless the status is `interior`.
    #[pyo3(get)]
    log_el: f64,
    /// `interior`, `boundary` or `infeasible`.
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    iterations: usize,
}

#[pymethods]
impl PyElSolution {
    fn __repr__(&self) -> String {
        format!(
            "ElSolution(status={}, log_el={}, iterations={})",
            self.status, self.log_el, self.iterations
        )
    }
}

fn status_name(s: el::ElStatus) -> String {
    match s {
        el::ElStatus::Interior => "interior",
        el::ElStatus::Boundary => "boundary",
        el::ElStatus::Infeasible => "infeasible",
    }
    .to_string()
}

/// Maximise the empirical likelihood of weights on the rows of `h` subject to
/// the weighted rows summing to zero.
#[pyfunction]
#[pyo3(signature = (h, tolerance = 1e-8, max_iterations = 100, weight_floor = 1e-12))]
fn solve_el(
    h: Vec<Vec<f64>>,
    tolerance: f64,
    max_iterations: usize,
    weight_floor: f64,
) -> PyResult<PyElSolution> {
    let opts = SolverOptions {
        tolerance,
        max_iterations,
        weight_floor,
        ..SolverOptions::default()
    };
    let m = ConstraintMatrix::from_rows(&h).map_err(py_err)?;
    let sol = el::solve_el(&m, &opts).map_err(py_err)?;
    Ok(PyElSolution {
        weights: sol.weights,
        multiplier: sol.multiplier,
        log_el: sol.log_el,
        status: status_name(sol.status),
        iterations: sol.iterations,
    })
}

/// True when some column of `h` is strictly one-signed.
#[pyfunction]
fn definitely_infeasible(h: Vec<Vec<f64>>) -> PyResult<bool> {
    let m = ConstraintMatrix::from_rows(&h).map_err(py_err)?;
    Ok(el::quick_infeasibility_check(&m) == Feasibility::DefinitelyInfeasible)
}

/// Draw a dataset of size `n` from an example model at `theta`.
#[pyfunction]
#[pyo3(signature = (example, theta, n, seed))]
fn simulate(example: &str, theta: Vec<f64>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let ex = parse_example(example)?;
    let model = ex.default_model().with_n(n).map_err(py_err)?;
    model.simulate(&theta, &Stream::new(seed)).map_err(py_err)
}

/// Summary values and labels of `data` under a preset of `example`, or under
/// an explicit JSON list of statistics.
#[pyfunction]
#[pyo3(signature = (example, data, summaries = None))]
fn summarize(
    example: &str,
    data: Vec<f64>,
    summaries: Option<&str>,
) -> PyResult<(Vec<f64>, Vec<String>)> {
    let ex = parse_example(example)?;
    let spec = summary_choice(summaries)?
        .unwrap_or_else(|| ex.default_summaries().into())
        .resolve(ex)
        .map_err(py_err)?;
    let v = spec.apply(&data).map_err(py_err)?;
    Ok((v.values, v.labels))
}

fn summary_choice(text: Option<&str>) -> PyResult<Option<SummaryChoice>> {
    match text {
        None => Ok(None),
        Some(t) if t.trim_start().starts_with('[') => {
            experiments::parse_json(t).map(Some).map_err(py_err)
        }
        Some(t) => Ok(Some(SummaryChoice::Preset(t.to_string()))),
    }
}

/// Empirical log-likelihood of `observed` given simulated summary rows.
#[pyfunction]
fn el_loglik(sims: Vec<Vec<f64>>, observed: Vec<f64>) -> PyResult<f64> {
    pseudolik::el_loglik_from_summaries(&sims, &observed, &SolverOptions::default())
        .map(|e| e.log_value)
        .map_err(py_err)
}

/// Gaussian synthetic log-likelihood of `observed` given simulated summary rows.
#[pyfunction]
fn synthetic_loglik(sims: Vec<Vec<f64>>, observed: Vec<f64>) -> PyResult<f64> {
    pseudolik::synthetic_loglik_from_summaries(&sims, &observed)
        .map(|e| e.log_value)
        .map_err(py_err)
}

/// Posterior draws of a random-walk Metropolis run.
#[pyclass(name = "Chain", frozen)]
struct PyChain {
    inner: samplers::Chain,
}

#[pymethods]
impl PyChain {
    #[getter]
    fn param_names(&self) -> Vec<String> {
        self.inner.param_names.clone()
    }
    #[getter]
    fn draws(&self) -> Vec<Vec<f64>> {
        self.inner.draws.clone()
    }
    #[getter]
    fn log_kernels(&self) -> Vec<f64> {
        self.inner.log_kernels.clone()
    }
    #[getter]
    fn accepted(&self) -> Vec<bool> {
        self.inner.accepted.clone()
    }
    #[getter]
    fn acceptance_rate(&self) -> f64 {
        self.inner.acceptance_rate()
    }
    fn __len__(&self) -> usize {
        self.inner.len()
    }
    /// Per-coordinate posterior summaries as a JSON string.
    fn summary_json(&self) -> PyResult<String> {
        to_json(&self.inner.summarize().map_err(py_err)?)
    }
    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv(path.as_ref()).map_err(py_err)
    }
}

/// Likelihood-free posterior of an example model given observed data.
#[pyclass(name = "Posterior", frozen)]
struct PyPosterior {
    inner: pseudolik::Posterior,
    example: Example,
}

#[pymethods]
impl PyPosterior {
    #[new]
    #[pyo3(signature = (example, data, summaries = None, m = None, method = "el"))]
    fn new(
        example: &str,
        data: Vec<f64>,
        summaries: Option<&str>,
        m: Option<usize>,
        method: &str,
    ) -> PyResult<Self> {
        let ex = parse_example(example)?;
        let method: Method = experiments::parse_json(&format!("\"{method}\"")).map_err(py_err)?;
        let kind = method
            .estimator_kind()
            .ok_or_else(|| PyValueError::new_err("method must be `el` or `synthetic`"))?;
        let spec = summary_choice(summaries)?
            .unwrap_or_else(|| ex.default_summaries().into())
            .resolve(ex)
            .map_err(py_err)?;
        let n = if ex == Example::Stereo { ex.default_n() } else { data.len() };
        let model = ex.model(n, spec).map_err(py_err)?;
        let estimator = EstimatorConfig {
            m: m.unwrap_or_else(|| ex.default_m()),
            solver: SolverOptions::default(),
            kind,
        };
        let inner = pseudolik::Posterior::from_data(model, &data, estimator).map_err(py_err)?;
        Ok(Self { inner, example: ex })
    }

    #[getter]
    fn observed(&self) -> Vec<f64> {
        self.inner.observed.values.clone()
    }

    /// Log prior plus one noisy log-likelihood estimate at `theta`.
    fn log_kernel(&self, theta: Vec<f64>, seed: u64) -> f64 {
        self.inner.log_kernel(&theta, &Stream::new(seed))
    }

    /// Pseudo-marginal random-walk Metropolis from `init` (default: the
    /// example's reference parameter).
    #[pyo3(signature = (iterations, burnin, seed, init = None, proposal_scale = None, adapt = true))]
    fn sample(
        &self,
        py: Python<'_>,
        iterations: usize,
        burnin: usize,
        seed: u64,
        init: Option<Vec<f64>>,
        proposal_scale: Option<Vec<f64>>,
        adapt: bool,
    ) -> PyResult<PyChain> {
        let init = init.unwrap_or_else(|| self.example.truth());
        let cfg = RwmConfig {
            iterations,
            burnin,
            proposal_scale: proposal_scale.unwrap_or_else(|| {
                experiments::default_proposal_scale(self.example, self.inner.model.n())
            }),
            adapt,
        };
        let chain = py
            .detach(|| samplers::rwm_sample(&self.inner, &init, &cfg, &Stream::new(seed)))
            .map_err(py_err)?
            .with_param_names(self.inner.model.param_names());
        Ok(PyChain { inner: chain })
    }
}

/// Run a JSON inference config; returns the run summary as JSON.
#[pyfunction]
fn run(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: experiments::RunConfig = experiments::parse_json(config).map_err(py_err)?;
    let outcome = py.detach(|| experiments::run_inference(&cfg)).map_err(py_err)?;
    to_json(&outcome.summary)
}

/// Run a JSON coverage-study config; returns the report as JSON.
#[pyfunction]
fn coverage(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: experiments::CoverageConfig = experiments::parse_json(config).map_err(py_err)?;
    to_json(&py.detach(|| experiments::coverage_study(&cfg)).map_err(py_err)?)
}

/// Run a JSON concentration-test config; returns the report as JSON.
#[pyfunction]
fn concentration(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg: experiments::ConcentrationConfig = experiments::parse_json(config).map_err(py_err)?;
    to_json(&py.detach(|| experiments::concentration_test(&cfg)).map_err(py_err)?)
}

/// Gaussian kernel density of each coordinate: `(coordinate, x, density)` rows.
#[pyfunction]
#[pyo3(signature = (names, draws, grid = 512))]
fn density(names: Vec<String>, draws: Vec<Vec<f64>>, grid: usize) -> PyResult<Vec<(String, f64, f64)>> {
    let rows = experiments::density_table(&names, &draws, grid).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| (r.coordinate, r.x, r.density)).collect())
}

#[pymodule]
fn pyelabc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyElSolution>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyPosterior>()?;
    m.add_function(wrap_pyfunction!(solve_el, m)?)?;
    m.add_function(wrap_pyfunction!(definitely_infeasible, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(el_loglik, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_loglik, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(concentration, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    Ok(())
}
