//! Python bindings: media, pulses, propagation, optimization, decoherence,
//! radiation trapping and config-driven sweeps.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use eitlab::config::{ConfigError, ScenarioConfig};
use eitlab::{decoherence, harness, optimizer, radtrap, scaling, spectrum};

fn err(e: eitlab::Error) -> PyErr {
    match e {
        eitlab::Error::Domain(_) | eitlab::Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

#[pyclass(name = "MediumParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMedium(eitlab::MediumParams);

#[pymethods]
impl PyMedium {
    #[new]
    #[pyo3(signature = (d, gamma_s = 0.0, delta = 0.0))]
    fn new(d: f64, gamma_s: f64, delta: f64) -> PyResult<Self> {
        eitlab::MediumParams::new(d, gamma_s, delta).map(PyMedium).map_err(err)
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.d
    }

    #[getter]
    fn gamma_s(&self) -> f64 {
        self.0.gamma_s
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta
    }

    fn __repr__(&self) -> String {
        format!("MediumParams(d={}, gamma_s={}, delta={})", self.0.d, self.0.gamma_s, self.0.delta)
    }
}

/// Complex pulse on a uniform grid; samples cross as (re, im) pairs.
#[pyclass(name = "Envelope", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnvelope(eitlab::Envelope);

#[pymethods]
impl PyEnvelope {
    #[new]
    fn new(t0: f64, dt: f64, values: Vec<(f64, f64)>) -> PyResult<Self> {
        let v = values.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        eitlab::Envelope::new(t0, dt, v).map(PyEnvelope).map_err(err)
    }

    #[staticmethod]
    fn gaussian(t0: f64, dt: f64, n: usize, center: f64, fwhm: f64) -> PyResult<Self> {
        eitlab::Envelope::gaussian(t0, dt, n, center, fwhm).map(PyEnvelope).map_err(err)
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn times(&self) -> Vec<f64> {
        self.0.times().collect()
    }

    fn intensity(&self) -> Vec<f64> {
        self.0.intensity()
    }

    fn values(&self) -> Vec<(f64, f64)> {
        self.0.values().iter().map(|v| (v.re, v.im)).collect()
    }

    fn peak_time(&self) -> f64 {
        self.0.peak_time()
    }

    fn fwhm(&self) -> Option<f64> {
        self.0.fwhm()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "StorageReport", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyStorageReport {
    eta_total: f64,
    eta_leakage: f64,
    eta_scatter: f64,
    eta_spin_decay: f64,
    eta_residual: f64,
    retrieved: PyEnvelope,
}

#[pymethods]
impl PyStorageReport {
    fn sum(&self) -> f64 {
        self.eta_total + self.eta_leakage + self.eta_scatter + self.eta_spin_decay + self.eta_residual
    }
}

#[pyclass(name = "OptimizationTrace", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyTrace {
    etas: Vec<f64>,
    converged: bool,
    input: PyEnvelope,
    retrieved: PyEnvelope,
    t_opt: Option<f64>,
}

#[pyclass(name = "TrappingStats", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyTrapping {
    density: f64,
    mean_scatters: f64,
    std_scatters: f64,
    mean_residence: f64,
    n_side: usize,
    n_end: usize,
    n_quenched: usize,
    degenerate: bool,
    rise_time: Option<f64>,
}

#[pyfunction]
fn eit_bandwidth(omega_c: f64, medium: &PyMedium) -> PyResult<f64> {
    scaling::eit_bandwidth(omega_c, &medium.0).map_err(err)
}

#[pyfunction]
fn group_velocity(omega_c: f64, medium: &PyMedium) -> PyResult<f64> {
    scaling::group_velocity(omega_c, &medium.0).map_err(err)
}

#[pyfunction]
fn absolute_delay(medium: &PyMedium, omega_c: f64) -> PyResult<f64> {
    scaling::absolute_delay(&medium.0, omega_c).map_err(err)
}

/// Intensity transmission at two-photon detuning `delta2`.
#[pyfunction]
fn transmission(medium: &PyMedium, omega_c: f64, delta2: f64) -> f64 {
    spectrum::transmission(&medium.0, omega_c, delta2)
}

/// Fitted FWHM of the transparency window.
#[pyfunction]
fn eit_fwhm(medium: &PyMedium, omega_c: f64) -> PyResult<f64> {
    spectrum::fitted_eit_fwhm(&medium.0, omega_c).map(|(_, f)| f.fwhm).map_err(err)
}

/// Peak delay and transmitted fraction with the control left on.
#[pyfunction]
fn slow_light(pulse: &PyEnvelope, medium: &PyMedium, omega_c: f64) -> PyResult<(f64, f64)> {
    let grid = eitlab::Grid::auto(&medium.0, omega_c);
    optimizer::slow_light_run(&pulse.0, &medium.0, omega_c, grid).map_err(err)
}

fn report(r: eitlab::StorageReport) -> PyStorageReport {
    PyStorageReport {
        eta_total: r.eta_total,
        eta_leakage: r.eta_leakage,
        eta_scatter: r.eta_scatter,
        eta_spin_decay: r.eta_spin_decay,
        eta_residual: r.eta_residual,
        retrieved: PyEnvelope(r.retrieved),
    }
}

/// Store for `storage` and read back with the same control. Without a
/// pulse the default Gaussian seed for the write window is used.
#[pyfunction]
#[pyo3(signature = (medium, omega_c, storage, pulse = None))]
fn store_and_retrieve(medium: &PyMedium, omega_c: f64, storage: f64, pulse: Option<&PyEnvelope>) -> PyResult<PyStorageReport> {
    let grid = eitlab::Grid::auto(&medium.0, omega_c);
    let setup = optimizer::StorageSetup {
        storage,
        ..optimizer::StorageSetup::new(omega_c)
    };
    let seed;
    let pulse = match pulse {
        Some(p) => &p.0,
        None => {
            seed = setup.gaussian_seed(&medium.0, grid.dt).map_err(err)?;
            &seed
        }
    };
    let control = setup.control(&medium.0, grid.dt).map_err(err)?;
    eitlab::store_and_retrieve(pulse, &control, &medium.0, grid).map(report).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (medium, omega_c, max_iter = optimizer::DEFAULT_MAX_ITER, tol = optimizer::DEFAULT_TOL))]
fn optimize(py: Python<'_>, medium: &PyMedium, omega_c: f64, max_iter: usize, tol: f64) -> PyResult<PyTrace> {
    let m = medium.0;
    let trace = py
        .detach(|| {
            let setup = optimizer::StorageSetup {
                max_iter,
                tol,
                ..optimizer::StorageSetup::new(omega_c)
            };
            setup.run(&m, eitlab::Grid::auto(&m, omega_c), None)
        })
        .map_err(err)?;
    Ok(PyTrace {
        t_opt: optimizer::optimal_pulse_duration(&trace).ok().map(|t| t.value),
        etas: trace.etas,
        converged: trace.converged,
        input: PyEnvelope(trace.input),
        retrieved: PyEnvelope(trace.retrieved),
    })
}

#[pyfunction]
#[pyo3(signature = (density, tau0 = decoherence::DEFAULT_TAU0_US, k_se = decoherence::DEFAULT_K_SE))]
fn coherence_lifetime(density: f64, tau0: f64, k_se: f64) -> PyResult<f64> {
    let m = decoherence::DecoherenceModel::new(tau0, k_se).map_err(err)?;
    decoherence::coherence_lifetime(&m, density).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (tau_us, gamma_per_us = None))]
fn gamma_s_from_lifetime(tau_us: f64, gamma_per_us: Option<f64>) -> PyResult<f64> {
    decoherence::gamma_s_from_lifetime(tau_us, gamma_per_us).map_err(err)
}

/// Returns `(value, exceeds_unity)`.
#[pyfunction]
fn slow_light_prediction(eta_leakage: f64, eta_storage: f64, tau: f64, tau_coherence: f64) -> PyResult<(f64, bool)> {
    decoherence::slow_light_prediction(eta_leakage, eta_storage, tau, tau_coherence)
        .map(|p| (p.value, p.exceeds_unity))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (length, radius, quench, density, n_walkers = 10_000, seed = 1,
                    cross_section = radtrap::DEFAULT_CROSS_SECTION, excited_lifetime = radtrap::DEFAULT_LIFETIME_NS))]
#[allow(clippy::too_many_arguments)]
fn simulate_walks(
    py: Python<'_>,
    length: f64,
    radius: f64,
    quench: f64,
    density: f64,
    n_walkers: usize,
    seed: u64,
    cross_section: f64,
    excited_lifetime: f64,
) -> PyResult<PyTrapping> {
    let g = radtrap::CellGeometry::new(length, radius, quench).map_err(err)?;
    let s = py
        .detach(|| radtrap::simulate_walks(&g, density, cross_section, excited_lifetime, n_walkers, seed))
        .map_err(err)?;
    Ok(PyTrapping {
        rise_time: radtrap::rise_time(&s).ok(),
        density: s.density,
        mean_scatters: s.mean_scatters,
        std_scatters: s.std_scatters,
        mean_residence: s.mean_residence,
        n_side: s.n_side,
        n_end: s.n_end,
        n_quenched: s.n_quenched,
        degenerate: s.degenerate,
    })
}

/// Returns `(fwhm, closed_form, thin)`.
#[pyfunction]
fn absorption_linewidth_proxy(d_eff: f64, detuning_grid: Vec<f64>) -> PyResult<(f64, Option<f64>, bool)> {
    radtrap::absorption_linewidth_proxy(d_eff, &detuning_grid)
        .map(|p| (p.fwhm, p.closed_form, p.thin))
        .map_err(err)
}

fn parse_config(text: &str) -> PyResult<ScenarioConfig> {
    ScenarioConfig::parse(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Violations of a config text, empty when it is valid.
#[pyfunction]
fn validate_config(text: &str) -> Vec<String> {
    match ScenarioConfig::parse(text) {
        Ok(_) => Vec::new(),
        Err(ConfigError::Invalid(v)) => v.iter().map(|x| x.to_string()).collect(),
        Err(e) => vec![e.to_string()],
    }
}

/// Sweep CSV for a config text.
#[pyfunction]
#[pyo3(signature = (config_text, jobs = 1))]
fn run_sweep(py: Python<'_>, config_text: &str, jobs: usize) -> PyResult<String> {
    let cfg = parse_config(config_text)?;
    let rows = py.detach(|| harness::run_sweep(&cfg, jobs)).map_err(err)?;
    Ok(harness::sweep_csv(&rows))
}

#[pymodule]
fn eitlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMedium>()?;
    m.add_class::<PyEnvelope>()?;
    m.add_class::<PyStorageReport>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyTrapping>()?;
    m.add_function(wrap_pyfunction!(eit_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(group_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(absolute_delay, m)?)?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(eit_fwhm, m)?)?;
    m.add_function(wrap_pyfunction!(slow_light, m)?)?;
    m.add_function(wrap_pyfunction!(store_and_retrieve, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_lifetime, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_s_from_lifetime, m)?)?;
    m.add_function(wrap_pyfunction!(slow_light_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_walks, m)?)?;
    m.add_function(wrap_pyfunction!(absorption_linewidth_proxy, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
