//! Python bindings: configs, the per-point analysis, the command outputs and
//! the closed-form amplitudes.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weaktime::harness::{commands, ExperimentConfig};
use weaktime::propagator::{build_momentum_grid, phase_rate_bound, PostSelection, Propagator};
use weaktime::steepest::{self, SdConfig};
use weaktime::{tptd, weak, Amplitude, Error, MomentSummary, PhysicalParams, SquareBarrier};

create_exception!(weaktime, ConvergenceError, PyException, "A numerical limit was not resolved.");

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Convergence(_) | Error::Resolution(_) => ConvergenceError::new_err(err.to_string()),
        Error::Io(_) => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Experiment configuration (atomic units unless `hbar`/`mass` say otherwise).
#[pyclass(name = "Config", module = "weaktime", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: ExperimentConfig::reference() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ExperimentConfig::from_json(text).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ExperimentConfig::load(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn with_gamma(&self, gamma: f64) -> PyResult<Self> {
        let inner = self.inner.with_gamma(gamma);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Copy with the barrier switched off.
    fn free(&self) -> Self {
        let mut inner = self.inner.clone();
        inner.barrier = SquareBarrier::free(inner.barrier.half_width);
        inner.name = format!("{}_free", inner.name);
        Self { inner }
    }

    fn with_x(&self, x: f64) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.x = x;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.state.gamma
    }

    #[getter]
    fn p_incident(&self) -> f64 {
        self.inner.state.p_incident
    }

    #[getter]
    fn x_center(&self) -> f64 {
        self.inner.state.x_center
    }

    #[getter]
    fn barrier_height(&self) -> f64 {
        self.inner.barrier.height
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.barrier.half_width
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(name={:?}, gamma={}, p_incident={}, x_center={}, V0={}, a={}, x={})",
            self.inner.name,
            self.inner.state.gamma,
            self.inner.state.p_incident,
            self.inner.state.x_center,
            self.inner.barrier.height,
            self.inner.barrier.half_width,
            self.inner.x
        )
    }
}

/// Time-averaged weak values and time moments at the post-selected point.
#[pyclass(name = "Summary", module = "weaktime", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySummary {
    mean_p: f64,
    var_p: f64,
    std_p: f64,
    mean_h: f64,
    var_h: f64,
    mean_t: f64,
    var_t: f64,
    commutator: Amplitude,
    product_second_moment: f64,
    product_stddev: f64,
    variance_product: f64,
    bound_rhs: f64,
    p_at_zero: f64,
    masked_mass: f64,
    hbar: f64,
}

impl From<&MomentSummary> for PySummary {
    fn from(s: &MomentSummary) -> Self {
        Self {
            mean_p: s.mean_p,
            var_p: s.var_p,
            std_p: s.std_p(),
            mean_h: s.mean_h,
            var_h: s.var_h,
            mean_t: s.mean_t,
            var_t: s.var_t,
            commutator: s.commutator,
            product_second_moment: s.product_second_moment,
            product_stddev: s.product_stddev,
            variance_product: s.variance_product(),
            bound_rhs: s.bound_rhs,
            p_at_zero: s.p_at_zero,
            masked_mass: s.masked_mass,
            hbar: s.hbar,
        }
    }
}

#[pymethods]
impl PySummary {
    fn bounds_hold(&self) -> bool {
        self.product_second_moment >= 0.25 * self.hbar * self.hbar
            && self.product_stddev >= self.bound_rhs
    }

    fn __repr__(&self) -> String {
        format!(
            "Summary(mean_p={:.6}, std_p={:.6}, mean_t={:.3}, var_t={:.3}, mean_h={:.6}, var_h={:.4e})",
            self.mean_p, self.std_p, self.mean_t, self.var_t, self.mean_h, self.var_h
        )
    }
}

/// Distribution and weak-value series on the adaptive time grid.
#[pyclass(name = "Analysis", module = "weaktime", get_all, skip_from_py_object)]
struct PyAnalysis {
    times: Vec<f64>,
    density: Vec<f64>,
    p_weak: Vec<Amplitude>,
    h_weak: Vec<Amplitude>,
    valid: Vec<bool>,
    normalization: f64,
    t_max: f64,
    tail_mass: f64,
    tail_slope: f64,
    summary: PySummary,
}

#[pymethods]
impl PyAnalysis {
    fn peak(&self) -> (f64, f64) {
        self.times
            .iter()
            .zip(&self.density)
            .fold((0.0, f64::MIN), |a, (&t, &p)| if p > a.1 { (t, p) } else { a })
    }

    fn __len__(&self) -> usize {
        self.times.len()
    }
}

#[pyfunction]
fn analyze(py: Python<'_>, config: &PyConfig) -> PyResult<PyAnalysis> {
    let cfg = config.inner.clone();
    let a = py
        .detach(move || {
            let system = cfg.system();
            let sel = PostSelection::new(cfg.x, &system, cfg.grid.margin)?;
            weak::analyze(&sel, &system, &cfg.grid)
        })
        .map_err(to_py)?;
    let d = &a.distribution;
    Ok(PyAnalysis {
        times: d.grid.times().collect(),
        density: d.density.clone(),
        p_weak: a.series.p_weak.clone(),
        h_weak: a.series.h_weak.clone(),
        valid: a.series.valid.clone(),
        normalization: d.normalization,
        t_max: d.grid.t_max,
        tail_mass: d.tail_mass_estimate,
        tail_slope: d.tail_slope,
        summary: (&a.summary).into(),
    })
}

/// `table` result as a dict (the JSON record parsed by Python's `json`).
#[pyfunction]
fn table<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let record = py.detach(move || commands::table_record(&cfg)).map_err(to_py)?;
    let text = serde_json::to_string(&record).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))?.cast_into::<PyDict>().map_err(Into::into)
}

/// Runs the invariant suite; returns `(all_passed, report_lines)`.
#[pyfunction]
fn verify(py: Python<'_>, config: &PyConfig) -> PyResult<(bool, Vec<String>)> {
    let cfg = config.inner.clone();
    let report = py.detach(move || commands::verify_report(&cfg)).map_err(to_py)?;
    Ok((report.passed(), report.lines()))
}

#[pyfunction]
fn write_fig1(py: Python<'_>, config: &PyConfig, out_dir: PathBuf) -> PyResult<PathBuf> {
    let cfg = config.inner.clone();
    py.detach(move || commands::cmd_fig1(&cfg, &out_dir)).map_err(to_py)
}

#[pyfunction]
fn write_fig2(py: Python<'_>, config: &PyConfig, out_dir: PathBuf) -> PyResult<PathBuf> {
    let cfg = config.inner.clone();
    py.detach(move || commands::cmd_fig2(&cfg, &out_dir)).map_err(to_py)
}

/// Richardson-extrapolated arrival-time momentum at the config's point.
#[pyfunction]
#[pyo3(signature = (config, delta_x=None))]
fn arrival_time_momentum(py: Python<'_>, config: &PyConfig, delta_x: Option<f64>) -> PyResult<f64> {
    let cfg = config.inner.clone();
    py.detach(move || {
        let dx = delta_x.unwrap_or(cfg.grid.delta_x);
        tptd::arrival_time_momentum(cfg.x, dx, &cfg.system(), &cfg.grid).map(|a| a.momentum)
    })
    .map_err(to_py)
}

/// `(ψ, Ĥψ, ∂ₓψ)` at `(x, t)`.
#[pyfunction]
fn wavefunction(
    py: Python<'_>,
    config: &PyConfig,
    x: f64,
    t: f64,
) -> PyResult<(Amplitude, Amplitude, Amplitude)> {
    let cfg = config.inner.clone();
    py.detach(move || {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
        }
        let system = cfg.system();
        let sel = PostSelection::new(x, &system, 0.0)?;
        let grid = build_momentum_grid(&system.state, &system.params, &cfg.grid)?;
        let grid = grid.refined_for_phase_rate(phase_rate_bound(&system, x, t, grid.p_hi))?;
        let v = Propagator::new(&sel, &grid, &system)?.evaluate(t);
        Ok((v.psi, v.h_psi, v.d_psi))
    })
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, height=1.0, half_width=1.0, hbar=1.0, mass=0.5))]
fn transmission_amplitude(p: Amplitude, height: f64, half_width: f64, hbar: f64, mass: f64) -> PyResult<Amplitude> {
    let params = PhysicalParams::new(hbar, mass).map_err(to_py)?;
    let barrier = SquareBarrier::new(height, half_width).map_err(to_py)?;
    barrier.transmission(&params, p).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, height=1.0, half_width=1.0, hbar=1.0, mass=0.5))]
fn reflection_amplitude(p: Amplitude, height: f64, half_width: f64, hbar: f64, mass: f64) -> PyResult<Amplitude> {
    let params = PhysicalParams::new(hbar, mass).map_err(to_py)?;
    let barrier = SquareBarrier::new(height, half_width).map_err(to_py)?;
    barrier.reflection(&params, p).map_err(to_py)
}

/// Gaussian transition path time distribution at the config's point.
#[pyfunction]
fn sd_distribution(config: &PyConfig, t: f64) -> f64 {
    steepest::sd_distribution(&SdConfig::new(&config.inner.system(), config.inner.x), t)
}

#[pyfunction]
fn sd_weak_momentum(config: &PyConfig, t: f64) -> Amplitude {
    steepest::sd_weak_momentum(&SdConfig::new(&config.inner.system(), config.inner.x), t)
}

/// Closed-form steepest-descent moments.
#[pyfunction]
fn sd_moments<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SdConfig::new(&config.inner.system(), config.inner.x);
    let d = PyDict::new(py);
    d.set_item("normalization", steepest::sd_norm(&cfg).map_err(to_py)?)?;
    d.set_item("mean_p", steepest::sd_mean_momentum(&cfg))?;
    d.set_item("var_t", steepest::sd_time_variance(&cfg))?;
    d.set_item("mean_h", steepest::sd_energy_mean(&cfg))?;
    d.set_item("var_h", steepest::sd_energy_variance(&cfg))?;
    d.set_item("uncertainty_product", steepest::sd_uncertainty_product(&cfg))?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "weaktime")]
fn weaktime_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySummary>()?;
    m.add_class::<PyAnalysis>()?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(write_fig1, m)?)?;
    m.add_function(wrap_pyfunction!(write_fig2, m)?)?;
    m.add_function(wrap_pyfunction!(arrival_time_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(wavefunction, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(reflection_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(sd_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(sd_weak_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(sd_moments, m)?)?;
    Ok(())
}
