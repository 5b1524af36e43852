//! Python bindings: performance data, the forward and inverse climb model,
//! fitted generative models and the end-to-end synthetic experiment.

use std::path::PathBuf;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use climbgen::dynamics::{integrate_climb_until_stall, ClimbConditions, ClimbTrajectory};
use climbgen::eval::report::ReportConfig;
use climbgen::generative::GenerativeClimbModel;
use climbgen::model_io::{load_model, save_model};
use climbgen::performance::{AircraftPerformance, PerformanceCatalog};
use climbgen::pipeline::simulate::Scenario;

fn py_err(e: climbgen::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Aircraft performance parameters keyed by ICAO type code.
#[pyclass(name = "PerformanceCatalog", module = "pyclimbgen")]
struct PyCatalog {
    inner: PerformanceCatalog,
}

impl PyCatalog {
    fn perf(&self, type_code: &str) -> PyResult<&AircraftPerformance> {
        self.inner
            .get(type_code)
            .ok_or_else(|| PyKeyError::new_err(format!("unknown type {type_code}")))
    }
}

#[pymethods]
impl PyCatalog {
    /// The built-in catalog.
    #[new]
    fn new() -> Self {
        PyCatalog { inner: PerformanceCatalog::shipped() }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCatalog { inner: PerformanceCatalog::load(&path).map_err(py_err)? })
    }

    fn type_codes(&self) -> Vec<String> {
        self.inner.type_codes().map(String::from).collect()
    }

    /// Nominal maximum-climb thrust (N) at altitude `h` (m).
    fn nominal_thrust(&self, type_code: &str, h: f64) -> PyResult<f64> {
        self.perf(type_code)?.nominal_thrust(h).map_err(py_err)
    }

    /// Climb rate (m/s) produced by thrust `t_hr` (N) at altitude `h` (m).
    #[pyo3(signature = (type_code, t_hr, h, mass=None, delta_t=0.0))]
    fn rocd(&self, type_code: &str, t_hr: f64, h: f64, mass: Option<f64>, delta_t: f64) -> PyResult<f64> {
        let perf = self.perf(type_code)?;
        let cond = conditions(perf, mass, delta_t);
        climbgen::dynamics::rocd(perf, &cond, t_hr, h).map_err(py_err)
    }

    /// Effective thrust (N) that yields climb rate `rocd` (m/s) at altitude `h` (m).
    #[pyo3(signature = (type_code, rocd, h, mass=None, delta_t=0.0))]
    fn invert_thrust(&self, type_code: &str, rocd: f64, h: f64, mass: Option<f64>, delta_t: f64) -> PyResult<f64> {
        let perf = self.perf(type_code)?;
        let cond = conditions(perf, mass, delta_t);
        climbgen::learning::invert_thrust(perf, &cond, rocd, h).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn conditions(perf: &AircraftPerformance, mass: Option<f64>, delta_t: f64) -> ClimbConditions {
    let mut c = ClimbConditions::nominal(perf);
    if let Some(m) = mass {
        c.mass = m;
    }
    c.delta_t = delta_t;
    c
}

fn climb_dict<'py>(py: Python<'py>, c: &ClimbTrajectory) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("h", c.states.iter().map(|s| s.h).collect::<Vec<_>>())?;
    d.set_item("t", c.states.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item("rocd", c.states.iter().map(|s| s.rocd).collect::<Vec<_>>())?;
    d.set_item("stalled_at", c.stalled_at)?;
    Ok(d)
}

/// A fitted per-type generative climb model.
#[pyclass(name = "GenerativeClimbModel", module = "pyclimbgen")]
struct PyModel {
    inner: GenerativeClimbModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel { inner: load_model(&path).map_err(py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_model(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn type_code(&self) -> String {
        self.inner.type_code.clone()
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.basis.grid.clone()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.basis.mean.clone()
    }

    #[getter]
    fn modes(&self) -> Vec<Vec<f64>> {
        self.inner.basis.modes.clone()
    }

    #[getter]
    fn explained_variance(&self) -> Vec<f64> {
        self.inner.basis.explained_variance.clone()
    }

    #[getter]
    fn mu_w(&self) -> Vec<f64> {
        self.inner.weights.mu_w.clone()
    }

    #[getter]
    fn sigma_diag(&self) -> Vec<f64> {
        self.inner.weights.sigma_diag.clone()
    }

    /// `count` thrust profiles on the model grid.
    fn sample_thrust(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.inner
            .sample_thrust(count, seed)
            .into_iter()
            .map(|p| p.values().to_vec())
            .collect()
    }

    /// `(lower, upper)` thrust profiles at confidence `level`.
    #[pyo3(signature = (level=0.95))]
    fn bound_profiles(&self, level: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.inner.bound_profiles(level).map_err(py_err)?;
        Ok((lo.values().to_vec(), hi.values().to_vec()))
    }

    /// Mean, fast and slow climbs through the model interval.
    #[pyo3(signature = (catalog, level=0.95))]
    fn climbs<'py>(&self, py: Python<'py>, catalog: &PyCatalog, level: f64) -> PyResult<Bound<'py, PyDict>> {
        let m = &self.inner;
        let perf = catalog.perf(&m.type_code)?;
        let cond = ClimbConditions::nominal(perf);
        let mean = integrate_climb_until_stall(perf, &cond, &m.mean_profile(), m.h_start(), m.h_end())
            .map_err(py_err)?;
        let b = m
            .bound_trajectories(perf, &cond, m.h_start(), m.h_end(), level)
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("mean", climb_dict(py, &mean)?)?;
        d.set_item("fast", climb_dict(py, &b.fast)?)?;
        d.set_item("slow", climb_dict(py, &b.slow)?)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "GenerativeClimbModel(type_code={:?}, n_modes={}, n_flights_fit={})",
            self.inner.type_code,
            self.inner.n_modes(),
            self.inner.n_flights_fit
        )
    }
}

/// χ² quantile for `n` degrees of freedom at `level`.
#[pyfunction]
fn confidence_radius(n: usize, level: f64) -> PyResult<f64> {
    if n == 0 || !(0.0..1.0).contains(&level) {
        return Err(PyValueError::new_err("need n >= 1 and 0 <= level < 1"));
    }
    Ok(climbgen::chi2::confidence_radius(n, level))
}

/// Number of components to keep for an explained-variance spectrum.
#[pyfunction]
fn select_components(fractions: Vec<f64>) -> usize {
    climbgen::kneedle::select_components(&fractions)
}

/// KL divergence (nats) between KDEs of two samples.
#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    climbgen::eval::metrics::kl_divergence(&p, &q).map_err(py_err)
}

/// Simulates a scenario, fits models on two thirds of the flights and
/// evaluates on the rest. Returns the metric rows and the fitted models.
#[pyfunction]
#[pyo3(signature = (seed=0, scenario=None, level=0.95))]
fn run_experiment<'py>(
    py: Python<'py>,
    seed: u64,
    scenario: Option<PathBuf>,
    level: f64,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<PyModel>)> {
    let sc = match scenario {
        Some(p) => Scenario::load(&p).map_err(py_err)?,
        None => Scenario::shipped(),
    };
    let cfg = ReportConfig { level, seed, ..ReportConfig::default() };
    let exp = py
        .detach(|| climbgen::workflow::end_to_end(&PerformanceCatalog::shipped(), &sc, seed, &cfg))
        .map_err(py_err)?;
    let rows = exp
        .report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("type_code", &r.type_code)?;
            d.set_item("n_f", r.n_f)?;
            d.set_item("mae_fl250_model", r.mae_fl250_model)?;
            d.set_item("mae_fl250_nominal", r.mae_fl250_nominal)?;
            d.set_item("mae_fl325_model", r.mae_fl325_model)?;
            d.set_item("mae_fl325_nominal", r.mae_fl325_nominal)?;
            d.set_item("kl_fl250", r.kl_fl250)?;
            d.set_item("kl_fl325", r.kl_fl325)?;
            d.set_item("coverage_pct", r.coverage_pct)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let models = exp.models.into_values().map(|inner| PyModel { inner }).collect();
    Ok((rows, models))
}

#[pymodule]
fn pyclimbgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(confidence_radius, m)?)?;
    m.add_function(wrap_pyfunction!(select_components, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
