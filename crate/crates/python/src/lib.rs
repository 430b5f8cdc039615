//! Python bindings. Rows, reports and summaries cross the boundary as plain
//! dicts and lists.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use blowup_core::analysis::{analyze, FitWindow};
use blowup_core::bounds;
use blowup_core::harness::{render_report, run_single, run_sweep, summarize, ExperimentConfig, Study, SweepRow};
use blowup_core::integrator::{integrate, SolverConfig, TrajectoryRecord};
use blowup_core::problem::{build_grid, check_initial_condition, Grid, ProblemSpec};
use blowup_core::{reaction, selfsim};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON so nested Rust data arrives as native objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn grid_for(problem: &ProblemSpec, h: f64) -> PyResult<Arc<Grid>> {
    build_grid(&problem.domain, h).map(Arc::new).map_err(err)
}

#[pyclass(name = "Problem", module = "blowup_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProblem {
    inner: ProblemSpec,
}

#[pymethods]
impl PyProblem {
    /// Ω = (-1, 1), φ = cos(πx/2), V ≡ 1, p = 2.
    #[staticmethod]
    fn reference(amplitude: f64) -> Self {
        PyProblem { inner: ProblemSpec::reference(amplitude) }
    }

    /// Problem section of an INI experiment file.
    #[staticmethod]
    fn from_config(path: &str) -> PyResult<Self> {
        let config = ExperimentConfig::from_file(path).map_err(err)?;
        Ok(PyProblem { inner: config.problem })
    }

    fn with_amplitude(&self, amplitude: f64) -> Self {
        PyProblem { inner: self.inner.with_amplitude(amplitude) }
    }

    fn with_exponent(&self, exponent: f64) -> Self {
        PyProblem { inner: self.inner.with_exponent(exponent) }
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude
    }

    #[getter]
    fn exponent(&self) -> f64 {
        self.inner.exponent
    }

    fn weight_at(&self, x: Vec<f64>) -> f64 {
        self.inner.weight_at(&x)
    }

    /// Whether `MΔφ + (min V / 2) M^p φ^p >= 0` holds on the grid, and its minimum.
    fn initial_condition(&self, h: f64) -> PyResult<(bool, f64)> {
        let grid = grid_for(&self.inner, h)?;
        Ok(check_initial_condition(&self.inner, &grid))
    }

    /// Comparison-argument upper bound on the blow-up time.
    fn upper_bound(&self, py: Python<'_>, h: f64) -> PyResult<Py<PyAny>> {
        let grid = grid_for(&self.inner, h)?;
        to_py(py, &bounds::comparison_upper_bound(&self.inner, &grid).map_err(err)?)
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Problem(p={}, M={}, dim={})", self.inner.exponent, self.inner.amplitude, self.inner.dimension())
    }
}

#[pyclass(name = "Trajectory", module = "blowup_lab", frozen)]
struct PyTrajectory {
    inner: TrajectoryRecord,
    exponent: f64,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn umax(&self) -> Vec<f64> {
        self.inner.umax.clone()
    }

    #[getter]
    fn stop_reason(&self) -> &'static str {
        self.inner.stop_reason.as_str()
    }

    /// `[(time, u_max, values)]` for each stored snapshot.
    fn snapshots(&self) -> Vec<(f64, f64, Vec<f64>)> {
        self.inner.snapshots.iter().map(|s| (s.time, s.umax, s.field.values.clone())).collect()
    }

    #[pyo3(signature = (window_lo=1e4, window_hi=f64::INFINITY, set_fraction=0.5))]
    fn analyze(&self, py: Python<'_>, window_lo: f64, window_hi: f64, set_fraction: f64) -> PyResult<Py<PyAny>> {
        let window = FitWindow::new(window_lo, window_hi);
        to_py(py, &analyze(&self.inner, self.exponent, &window, set_fraction).map_err(err)?)
    }

    fn __len__(&self) -> usize {
        self.inner.times.len()
    }
}

/// Integrates `problem` on a lattice of spacing `h`.
#[pyfunction]
#[pyo3(signature = (problem, h, eta=0.05, sigma=0.4, u_stop=1e8, reaction_only=false, snapshot_levels=None))]
fn simulate(
    py: Python<'_>,
    problem: &PyProblem,
    h: f64,
    eta: f64,
    sigma: f64,
    u_stop: f64,
    reaction_only: bool,
    snapshot_levels: Option<Vec<f64>>,
) -> PyResult<PyTrajectory> {
    let grid = grid_for(&problem.inner, h)?;
    let mut config =
        SolverConfig { growth_cap: eta, diffusion_safety: sigma, stop_threshold: u_stop, reaction_only, ..Default::default() };
    if let Some(levels) = snapshot_levels {
        config.snapshot_levels = levels;
    }
    let spec = problem.inner.clone();
    let inner = py.detach(|| integrate(&spec, &grid, &config)).map_err(err)?;
    Ok(PyTrajectory { inner, exponent: spec.exponent })
}

#[pyclass(name = "Experiment", module = "blowup_lab", frozen)]
struct PyExperiment {
    study: Study,
}

impl PyExperiment {
    fn rows(&self, py: Python<'_>, jobs: usize) -> Vec<SweepRow> {
        py.detach(|| run_sweep(&self.study, jobs, |_| {}).into_iter().map(|o| o.row).collect())
    }
}

#[pymethods]
impl PyExperiment {
    #[new]
    fn new(path: &str) -> PyResult<Self> {
        let config = ExperimentConfig::from_file(path).map_err(err)?;
        Ok(PyExperiment { study: Study::new(config).map_err(err)? })
    }

    #[staticmethod]
    fn from_str(text: &str) -> PyResult<Self> {
        let config = ExperimentConfig::parse(text).map_err(err)?;
        Ok(PyExperiment { study: Study::new(config).map_err(err)? })
    }

    #[getter]
    fn m_values(&self) -> Vec<f64> {
        self.study.config.m_values.clone()
    }

    #[getter]
    fn a_constant(&self) -> f64 {
        self.study.a_constant()
    }

    #[getter]
    fn x_bar(&self) -> Vec<f64> {
        self.study.weight.point.0.clone()
    }

    fn problem(&self) -> PyProblem {
        PyProblem { inner: self.study.config.problem.clone() }
    }

    /// One amplitude; returns the result row.
    fn run(&self, py: Python<'_>, m: f64) -> PyResult<Py<PyAny>> {
        let row = py.detach(|| run_single(&self.study, m).row);
        to_py(py, &row)
    }

    /// Every configured amplitude; returns `(rows, summary)`.
    #[pyo3(signature = (jobs=1))]
    fn sweep(&self, py: Python<'_>, jobs: usize) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
        let rows = self.rows(py, jobs);
        let summary = summarize(&self.study, &rows, false);
        Ok((to_py(py, &rows)?, to_py(py, &summary)?))
    }

    /// Text report of a fresh sweep.
    #[pyo3(signature = (jobs=1))]
    fn report(&self, py: Python<'_>, jobs: usize) -> String {
        let rows = self.rows(py, jobs);
        render_report(&summarize(&self.study, &rows, false), &rows)
    }
}

#[pyfunction]
fn ode_blowup_time(m: f64, phi_x: f64, v_x: f64, p: f64) -> PyResult<f64> {
    reaction::ode_blowup_time(m, phi_x, v_x, p).map_err(err)
}

#[pyfunction]
fn k_of_a(v_a: f64, p: f64) -> PyResult<f64> {
    selfsim::k_of_a(v_a, p).map_err(err)
}

#[pyfunction]
fn energy_at_limit(v_a: f64, p: f64, dim: usize) -> PyResult<f64> {
    selfsim::energy_at_limit(v_a, p, dim).map_err(err)
}

#[pyfunction]
fn rate_constant(m: f64, p: f64) -> f64 {
    bounds::rate_constant(m, p)
}

#[pyfunction]
fn gamma_exponent(p: f64) -> f64 {
    bounds::gamma_exponent(p)
}

#[pyfunction]
fn solve_epsilon(m: f64, phi_bar: f64, v_bar: f64, p: f64, d: f64, k: f64) -> Option<f64> {
    bounds::solve_epsilon(m, phi_bar, v_bar, p, d, k)
}

#[pymodule]
fn blowup_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ode_blowup_time, m)?)?;
    m.add_function(wrap_pyfunction!(k_of_a, m)?)?;
    m.add_function(wrap_pyfunction!(energy_at_limit, m)?)?;
    m.add_function(wrap_pyfunction!(rate_constant, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(solve_epsilon, m)?)?;
    let dict = PyDict::new(m.py());
    dict.set_item("version", env!("CARGO_PKG_VERSION"))?;
    m.add("build_info", dict)?;
    Ok(())
}
