//! Python bindings for the photothermal wall model.

use photothermal_core::calibrate::{fit_with, NelderMeadOptions};
use photothermal_core::io::series::format_trajectory;
use photothermal_core::io::{illuminance_scale as core_illuminance_scale, load_config, RunConfig};
use photothermal_core::metrics::{self, FinalConvention, MeasurementSeries, Unit};
use photothermal_core::thermal_model;
use photothermal_core::{
    CalibrationProblem, Channel, Error, ExitClass, LightInterval, LightSchedule, ParamName,
    ParamSpec,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e.exit_class() {
        ExitClass::Numerical => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for photothermal_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn series(times: Vec<f64>, values: Vec<f64>, unit: Unit) -> PyResult<MeasurementSeries> {
    if times.len() != values.len() {
        return Err(PyValueError::new_err(format!(
            "times has {} entries but values has {}",
            times.len(),
            values.len()
        )));
    }
    MeasurementSeries::new(times.into_iter().zip(values).collect(), unit, "python").py()
}

fn channel(name: &str) -> PyResult<Channel> {
    name.parse::<Channel>().py()
}

/// A wall, source, environment, light schedule and integrator settings.
#[pyclass(module = "photothermal", name = "Scenario")]
#[derive(Clone)]
struct PyScenario {
    inner: photothermal_core::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Bundled configuration by name, e.g. "table1_bilayer".
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: RunConfig::preset(name).py()?.scenario,
        })
    }

    #[staticmethod]
    fn from_config(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyScenario {
            inner: load_config(&path).py()?.scenario,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.assembly.kind().name()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.config.dt
    }

    #[setter]
    fn set_dt(&mut self, dt: f64) {
        self.inner.config.dt = dt;
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.config.duration
    }

    #[setter]
    fn set_duration(&mut self, duration: f64) {
        self.inner.config.duration = duration;
    }

    #[getter]
    fn record_stride(&self) -> usize {
        self.inner.config.record_stride
    }

    #[setter]
    fn set_record_stride(&mut self, stride: usize) {
        self.inner.config.record_stride = stride;
    }

    /// Sets one of alpha_s, alpha_L, h_se, h_Le, Q_h, scale.
    fn set_param(&mut self, name: &str, value: f64) -> PyResult<()> {
        let p: ParamName = name.parse().py()?;
        p.apply(&mut self.inner, value).py()
    }

    /// Replaces the light schedule with `(start, end, scale)` intervals.
    fn set_schedule(&mut self, intervals: Vec<(f64, f64, f64)>) -> PyResult<()> {
        let intervals = intervals
            .into_iter()
            .map(|(start, end, scale)| LightInterval { start, end, scale })
            .collect();
        self.inner.schedule = LightSchedule::new(intervals).py()?;
        Ok(())
    }

    /// Largest stable step, seconds.
    fn stability_limit(&self) -> f64 {
        photothermal_core::simulate::stability_limit(&self.inner.assembly).seconds
    }

    fn run(&self, py: Python<'_>) -> PyResult<PyTrajectory> {
        let inner = py.detach(|| self.inner.run()).py()?;
        Ok(PyTrajectory { inner })
    }

    /// `(theta_s, theta_L)` in kelvin; `theta_L` is None for a single layer.
    #[pyo3(signature = (scale = 1.0))]
    fn steady_state(&self, scale: f64) -> PyResult<(f64, Option<f64>)> {
        let s = self.inner.steady_state(scale).py()?;
        Ok((s.silicone, s.lig))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(kind={:?}, dt={}, duration={})",
            self.kind(),
            self.inner.config.dt,
            self.inner.config.duration
        )
    }
}

/// Uniformly sampled simulation output.
#[pyclass(module = "photothermal", name = "Trajectory")]
struct PyTrajectory {
    inner: photothermal_core::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.samples().iter().map(|s| s.time).collect()
    }

    #[getter]
    fn theta_s(&self) -> Vec<f64> {
        self.inner.samples().iter().map(|s| s.silicone).collect()
    }

    #[getter]
    fn theta_l(&self) -> Option<Vec<f64>> {
        self.inner.samples().iter().map(|s| s.lig).collect()
    }

    /// Values of "silicone", "lig" or "liquid-contact".
    #[pyo3(signature = (channel = "liquid-contact"))]
    fn values(&self, channel: &str) -> PyResult<Vec<f64>> {
        self.inner.values(self::channel(channel)?).py()
    }

    fn value_at(&self, channel: &str, t: f64) -> PyResult<f64> {
        self.inner.value_at(self::channel(channel)?, t).py()
    }

    fn to_csv(&self) -> String {
        format_trajectory(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.samples().len()
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    RunConfig::preset_names().collect()
}

/// 63% response report as a dict; `t63` is measured from the first sample.
#[pyfunction]
#[pyo3(signature = (times, values, convention = "window-final", window = 300.0, final_value = None, plateau_threshold = None, plateau_window = None))]
#[allow(clippy::too_many_arguments)]
fn response_time_63<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    convention: &str,
    window: f64,
    final_value: Option<f64>,
    plateau_threshold: Option<f64>,
    plateau_window: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let conv = match convention {
        "window-final" => FinalConvention::WindowFinal { window },
        "plateau" => match (plateau_threshold, plateau_window) {
            (Some(threshold), Some(window)) => FinalConvention::Plateau { threshold, window },
            _ => {
                return Err(PyValueError::new_err(
                    "plateau convention needs plateau_threshold and plateau_window",
                ))
            }
        },
        "supplied" => FinalConvention::Supplied(
            final_value.ok_or_else(|| PyValueError::new_err("supplied convention needs final_value"))?,
        ),
        other => return Err(PyValueError::new_err(format!("unknown convention `{other}`"))),
    };
    let r = metrics::response_time_63(&series(times, values, Unit::Kelvin)?, conv).py()?;
    let d = PyDict::new(py);
    d.set_item("t63", r.elapsed())?;
    d.set_item("crossing_time", r.t63)?;
    d.set_item("baseline", r.baseline)?;
    d.set_item("final", r.final_value)?;
    d.set_item("peak", r.peak_value)?;
    d.set_item("peak_time", r.peak_time)?;
    Ok(d)
}

/// `(value, reach_time)` of the first plateau.
#[pyfunction]
fn plateau_value(times: Vec<f64>, values: Vec<f64>, threshold: f64, window: f64) -> PyResult<(f64, f64)> {
    let p = metrics::plateau_value(&series(times, values, Unit::Kelvin)?, threshold, window).py()?;
    Ok((p.value, p.reach_time))
}

/// `(tau, r_squared)` of a light-off decay toward `ambient`.
#[pyfunction]
fn cooling_fit(times: Vec<f64>, values: Vec<f64>, ambient: f64) -> PyResult<(f64, f64)> {
    let f = metrics::cooling_fit(&series(times, values, Unit::Kelvin)?, ambient).py()?;
    Ok((f.tau, f.r_squared))
}

#[pyfunction]
fn cycle_degradation(peaks: Vec<f64>) -> PyResult<Vec<f64>> {
    metrics::cycle_degradation(&peaks).py()
}

/// Maps the first value to 0 and `plateau` to 1.
#[pyfunction]
fn normalize_curve(times: Vec<f64>, values: Vec<f64>, plateau: f64) -> PyResult<Vec<f64>> {
    let s = metrics::normalize_curve(&series(times, values, Unit::Degrees)?, plateau).py()?;
    Ok(s.values().collect())
}

#[pyfunction]
#[pyo3(signature = (distance, d_ref, exponent = 1.0))]
fn illuminance_scale(distance: f64, d_ref: f64, exponent: f64) -> PyResult<f64> {
    core_illuminance_scale(distance, d_ref, exponent).py()
}

/// Net radiative power from the hot to the cold surface, W.
#[pyfunction]
fn radiative_exchange(theta_hot: f64, eps_hot: f64, theta_cold: f64, eps_cold: f64, area: f64) -> PyResult<f64> {
    thermal_model::radiative_exchange(theta_hot, eps_hot, theta_cold, eps_cold, area).py()
}

/// Fits `(name, lower, upper, initial)` parameters to a kelvin series.
#[pyfunction]
#[pyo3(signature = (scenario, times, values, params, channel = "liquid-contact", max_iterations = 500))]
fn calibrate<'py>(
    py: Python<'py>,
    scenario: PyRef<'py, PyScenario>,
    times: Vec<f64>,
    values: Vec<f64>,
    params: Vec<(String, f64, f64, f64)>,
    channel: &str,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let free = params
        .into_iter()
        .map(|(name, lo, hi, init)| ParamSpec::new(name.parse().py()?, lo, hi, init).py())
        .collect::<PyResult<Vec<_>>>()?;
    let problem = CalibrationProblem::new(
        series(times, values, Unit::Kelvin)?,
        free,
        scenario.inner.clone(),
        self::channel(channel)?,
    )
    .py()?;
    let options = NelderMeadOptions {
        max_iterations,
        ..NelderMeadOptions::default()
    };
    let r = py.detach(|| fit_with(&problem, &options)).py()?;
    let d = PyDict::new(py);
    for (name, v) in &r.params {
        d.set_item(name.as_str(), *v)?;
    }
    d.set_item("sse", r.sse)?;
    d.set_item("rmse", r.rmse)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

#[pymodule]
fn photothermal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(response_time_63, m)?)?;
    m.add_function(wrap_pyfunction!(plateau_value, m)?)?;
    m.add_function(wrap_pyfunction!(cooling_fit, m)?)?;
    m.add_function(wrap_pyfunction!(cycle_degradation, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_curve, m)?)?;
    m.add_function(wrap_pyfunction!(illuminance_scale, m)?)?;
    m.add_function(wrap_pyfunction!(radiative_exchange, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    Ok(())
}
