//! Python bindings for `strobosq`.
//!
//! Structured results (summaries, sweep rows, search results) cross the
//! boundary as plain dicts built from their serde form.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use strobosq::metrics::report;
use strobosq::output::timeseries_csv;
use strobosq::sweep::SweepAxis;
use strobosq::{CovarianceState, Error, TwoModeConfig};

create_exception!(strobosq_py, StrobosqError, PyException);
create_exception!(strobosq_py, ConfigError, StrobosqError);
create_exception!(strobosq_py, DivergenceError, StrobosqError);

fn to_py_err(e: Error) -> PyErr {
    if e.is_config() {
        ConfigError::new_err(e.to_string())
    } else if e.is_divergence() {
        DivergenceError::new_err(e.to_string())
    } else {
        StrobosqError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| StrobosqError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_axis(axis: &str) -> PyResult<SweepAxis> {
    axis.parse().map_err(to_py_err)
}

/// Resolved run configuration. Keys and values follow the text config format.
#[pyclass(name = "RunConfig", module = "strobosq_py")]
struct PyRunConfig {
    inner: strobosq::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Parses `text` on top of the defaults.
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        strobosq::RunConfig::parse(text)
            .map(|inner| PyRunConfig { inner })
            .map_err(to_py_err)
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        strobosq::RunConfig::preset(name)
            .map(|inner| PyRunConfig { inner })
            .map_err(to_py_err)
    }

    /// Sets one key, e.g. `cfg.set("bath.temperature_mK", "0.7")`.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.apply_text(&format!("{key} = {value}"))
            .map_err(to_py_err)?;
        self.inner = next;
        Ok(())
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Config text plus the derived quantities as comment lines.
    fn echo(&self) -> PyResult<String> {
        self.inner.echo().map_err(to_py_err)
    }

    #[getter]
    fn preset_name(&self) -> Option<String> {
        self.inner.preset.clone()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    fn simulate(&self, py: Python<'_>) -> PyResult<PyTrajectory> {
        let cfg = self.inner.clone();
        py.detach(move || cfg.simulate())
            .map(|inner| PyTrajectory { inner })
            .map_err(to_py_err)
    }

    /// Runs and, when `out_dir` is given, writes the usual output files.
    /// Returns the summary dict.
    #[pyo3(signature = (out_dir = None))]
    fn run<'py>(&self, py: Python<'py>, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
        let cfg = self.inner.clone();
        let res = py
            .detach(move || strobosq::runner::run(&cfg, out_dir.as_deref()))
            .map_err(to_py_err)?;
        to_py(py, &res.summary)
    }

    fn __repr__(&self) -> String {
        match &self.inner.preset {
            Some(p) => format!("RunConfig(preset={p:?})"),
            None => "RunConfig(preset=None)".to_string(),
        }
    }
}

/// Sampled covariance trajectory.
#[pyclass(name = "Trajectory", module = "strobosq_py")]
struct PyTrajectory {
    inner: strobosq::Trajectory,
}

impl PyTrajectory {
    fn column(&self, f: impl Fn(&CovarianceState) -> f64) -> Vec<f64> {
        self.inner.samples.iter().map(|s| f(&s.state)).collect()
    }
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.column(|s| s.t)
    }

    #[getter]
    fn a11(&self) -> Vec<f64> {
        self.column(|s| s.a11)
    }

    #[getter]
    fn a12(&self) -> Vec<f64> {
        self.column(|s| s.a12)
    }

    #[getter]
    fn a21(&self) -> Vec<f64> {
        self.column(|s| s.a21)
    }

    #[getter]
    fn a22(&self) -> Vec<f64> {
        self.column(|s| s.a22)
    }

    #[getter]
    fn det(&self) -> Vec<f64> {
        self.column(CovarianceState::det)
    }

    #[getter]
    fn two_sigma_x(&self) -> Vec<f64> {
        self.column(|s| report(s).two_sigma_x)
    }

    #[getter]
    fn two_sigma_p(&self) -> Vec<f64> {
        self.column(|s| report(s).two_sigma_p)
    }

    #[getter]
    fn kappa_sq(&self) -> Vec<f64> {
        self.inner.samples.iter().map(|s| s.kappa_sq).collect()
    }

    #[getter]
    fn uncertainty_violation(&self) -> Option<f64> {
        self.inner.uncertainty_violation
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let s = strobosq::summarize(&self.inner).map_err(to_py_err)?;
        to_py(py, &s)
    }

    fn to_csv(&self) -> String {
        timeseries_csv(&self.inner)
    }
}

#[pyfunction]
fn thermal_occupation(temperature: f64, omega: f64) -> PyResult<f64> {
    strobosq::thermal_occupation(temperature, omega).map_err(to_py_err)
}

/// Time derivatives `(ȧ11, ȧ12, ȧ21, ȧ22)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn rhs(
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    kappa_sq: f64,
    omega: f64,
    gamma: f64,
    eta: f64,
    cap_n: f64,
) -> (f64, f64, f64, f64) {
    let s = CovarianceState::new(0.0, a11, a12, a21, a22);
    let d = strobosq::rhs(&s, kappa_sq, omega, gamma, eta, cap_n);
    (d[0], d[1], d[2], d[3])
}

/// `(sum, entangled)` for the Duan criterion.
#[pyfunction]
fn duan_sum(var_x_plus: f64, var_p_minus: f64) -> (f64, bool) {
    let w = strobosq::duan_sum(var_x_plus, var_p_minus);
    (w.sum, w.entangled)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    strobosq::PRESET_NAMES.to_vec()
}

#[pyfunction]
fn reproduce(py: Python<'_>, name: &str) -> PyResult<PyTrajectory> {
    PyRunConfig::preset(name)?.simulate(py)
}

/// Two collective modes from the single-mode config. Returns a dict of columns.
#[pyfunction]
#[pyo3(signature = (config, same_phase = false))]
fn simulate_entanglement<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    same_phase: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let run = config.inner.resolve().map_err(to_py_err)?;
    let m = run.model;
    let two = if same_phase {
        TwoModeConfig {
            shared: m.physical,
            derived: m.derived,
            schedule_plus: m.schedule,
            schedule_minus: m.schedule,
        }
    } else {
        TwoModeConfig::interleaved(m.physical, m.derived, m.schedule)
    };
    let traj = py
        .detach(move || strobosq::simulate_entanglement(&two, &run.control))
        .map_err(to_py_err)?;

    #[derive(Serialize)]
    struct Columns<'a> {
        t: &'a [f64],
        var_x_plus: &'a [f64],
        var_p_plus: &'a [f64],
        var_x_minus: &'a [f64],
        var_p_minus: &'a [f64],
        duan_sum: &'a [f64],
        entangled: &'a [bool],
        first_entangled_time: Option<f64>,
    }
    to_py(
        py,
        &Columns {
            t: &traj.times,
            var_x_plus: &traj.var_x_plus,
            var_p_plus: &traj.var_p_plus,
            var_x_minus: &traj.var_x_minus,
            var_p_minus: &traj.var_p_minus,
            duan_sum: &traj.duan_sum,
            entangled: &traj.entangled,
            first_entangled_time: traj.first_entangled_time(),
        },
    )
}

/// Returns the sweep CSV text.
#[pyfunction]
#[pyo3(signature = (config, axis, values, workers = 1))]
fn run_sweep(
    py: Python<'_>,
    config: &PyRunConfig,
    axis: &str,
    values: Vec<f64>,
    workers: usize,
) -> PyResult<String> {
    let spec = strobosq::SweepSpec {
        base: config.inner.clone(),
        axis: parse_axis(axis)?,
        values,
    };
    py.detach(move || strobosq::run_sweep(&spec, workers))
        .map(|r| r.to_csv())
        .map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (config, axis, lo, hi, rel_tol = 1e-3))]
fn find_threshold<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    axis: &str,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let axis = parse_axis(axis)?;
    let base = config.inner.clone();
    let opts = strobosq::ThresholdOptions {
        rel_tol,
        ..Default::default()
    };
    let res = py
        .detach(move || strobosq::find_threshold(&base, axis, lo, hi, &opts))
        .map_err(to_py_err)?;
    to_py(py, &res)
}

#[pyfunction]
#[pyo3(signature = (config, thresholds, phases = vec![0.0], refine = true, workers = 1))]
fn optimize_pulse<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    thresholds: Vec<f64>,
    phases: Vec<f64>,
    refine: bool,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let base = config.inner.clone();
    let space = strobosq::PulseSearchSpace { thresholds, phases };
    let opts = strobosq::OptimizeOptions {
        refine,
        workers,
        ..Default::default()
    };
    let res = py
        .detach(move || strobosq::optimize_pulse(&base, &space, &opts))
        .map_err(to_py_err)?;
    to_py(py, &res)
}

#[pymodule]
pub fn strobosq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("StrobosqError", py.get_type::<StrobosqError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DivergenceError", py.get_type::<DivergenceError>())?;
    m.add("SQUEEZING_THRESHOLD", strobosq::SQUEEZING_THRESHOLD)?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(thermal_occupation, m)?)?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(duan_sum, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(find_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_pulse, m)?)?;
    Ok(())
}
