//! Python bindings. Reports cross the boundary as plain dicts.

use pmnl::bounds::{enumerate_lhv_omega, enumerate_nchv_chi, noncontextual_local_omega, ModelClass};
use pmnl::noise::{self, CalibrationAxis, CalibrationTargets};
use pmnl::sampling::{self, ChiSource, CountsTable, EstimateOptions};
use pmnl::scenario::{self, ScenarioConfig};
use pmnl::serialize::to_canonical_json;
use pmnl::{Error, MeasurementPlan, SignMode};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, item: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = to_canonical_json(item).map_err(py_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        py.import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

#[pyclass(name = "NoiseModel", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyNoiseModel {
    inner: noise::NoiseModel,
}

#[pymethods]
impl PyNoiseModel {
    #[new]
    #[pyo3(signature = (ideal_fraction=1.0, phase=0.0, visibility=1.0, detection_efficiency=1.0))]
    fn new(ideal_fraction: f64, phase: f64, visibility: f64, detection_efficiency: f64) -> PyResult<Self> {
        let inner = noise::NoiseModel {
            ideal_fraction,
            phase,
            visibility,
            detection_efficiency,
        };
        inner.validate().map_err(py_err)?;
        Ok(PyNoiseModel { inner })
    }

    #[getter]
    fn ideal_fraction(&self) -> f64 {
        self.inner.ideal_fraction
    }

    #[getter]
    fn phase(&self) -> f64 {
        self.inner.phase
    }

    #[getter]
    fn visibility(&self) -> f64 {
        self.inner.visibility
    }

    #[getter]
    fn detection_efficiency(&self) -> f64 {
        self.inner.detection_efficiency
    }

    /// Exact χ, S and ω with per-term breakdowns.
    #[pyo3(signature = (sign_mode="absolute"))]
    fn evaluate<'py>(&self, py: Python<'py>, sign_mode: &str) -> PyResult<Bound<'py, PyAny>> {
        let r = self.inner.evaluate(parse(sign_mode)?).map_err(py_err)?;
        to_py(py, &r)
    }

    fn to_json(&self) -> PyResult<String> {
        to_canonical_json(&self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let m = self.inner;
        format!(
            "NoiseModel(ideal_fraction={}, phase={}, visibility={}, detection_efficiency={})",
            m.ideal_fraction, m.phase, m.visibility, m.detection_efficiency
        )
    }
}

fn model_or_ideal(noise: Option<PyRef<'_, PyNoiseModel>>) -> noise::NoiseModel {
    noise.map(|n| n.inner).unwrap_or(noise::NoiseModel::IDEAL)
}

/// Exact χ, S and ω.
#[pyfunction]
#[pyo3(signature = (noise=None, sign_mode="absolute"))]
fn evaluate<'py>(py: Python<'py>, noise: Option<PyRef<'py, PyNoiseModel>>, sign_mode: &str) -> PyResult<Bound<'py, PyAny>> {
    let r = model_or_ideal(noise).evaluate(parse(sign_mode)?).map_err(py_err)?;
    to_py(py, &r)
}

/// Joint outcome probabilities of a plan such as `"C-A-B|B'"`.
#[pyfunction]
#[pyo3(signature = (plan, noise=None))]
fn run_plan(plan: &str, noise: Option<PyRef<'_, PyNoiseModel>>) -> PyResult<Vec<f64>> {
    let plan: MeasurementPlan = parse(plan)?;
    let (state, engine) = model_or_ideal(noise).prepare().map_err(py_err)?;
    let d = engine.run_plan(&state, &plan).map_err(py_err)?;
    Ok(d.probabilities().to_vec())
}

/// Hidden-variable sweep: `nchv`, `lhv`, `lhv-past-only` or `nc-local`.
#[pyfunction]
#[pyo3(signature = (model="lhv", sign_mode="fixed"))]
fn bounds<'py>(py: Python<'py>, model: &str, sign_mode: &str) -> PyResult<Bound<'py, PyAny>> {
    let mode: SignMode = parse(sign_mode)?;
    let r = match parse::<ModelClass>(model)? {
        ModelClass::Nchv => enumerate_nchv_chi(),
        ModelClass::Lhv => enumerate_lhv_omega(mode, false),
        ModelClass::LhvPastOnly => enumerate_lhv_omega(mode, true),
        ModelClass::NcLocal => noncontextual_local_omega(),
    };
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (chi=5.817, s=11.430, axis="phase"))]
fn calibrate<'py>(py: Python<'py>, chi: f64, s: f64, axis: &str) -> PyResult<Bound<'py, PyAny>> {
    let axis: CalibrationAxis = parse(axis)?;
    let r = noise::calibrate(CalibrationTargets { chi, s }, axis).map_err(py_err)?;
    to_py(py, &r)
}

/// Counts table over the eighteen estimator configurations, or `plans`.
#[pyfunction]
#[pyo3(signature = (shots, seed, noise=None, plans=None))]
fn sample<'py>(
    py: Python<'py>,
    shots: u64,
    seed: u64,
    noise: Option<PyRef<'py, PyNoiseModel>>,
    plans: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let plans = match plans {
        Some(ids) => ids.iter().map(|s| parse(s)).collect::<PyResult<Vec<MeasurementPlan>>>()?,
        None => sampling::standard_plans(),
    };
    let t = sampling::sample_table(&model_or_ideal(noise), &plans, shots, seed).map_err(py_err)?;
    to_py(py, &t)
}

/// Estimates with standard errors from a counts table (dict or JSON).
#[pyfunction]
#[pyo3(signature = (counts, sign_mode="absolute", chi_source="dedicated"))]
fn estimate<'py>(py: Python<'py>, counts: &Bound<'py, PyAny>, sign_mode: &str, chi_source: &str) -> PyResult<Bound<'py, PyAny>> {
    let table: CountsTable = from_py(py, counts)?;
    let chi_source = match chi_source {
        "dedicated" => ChiSource::Dedicated,
        "marginalized" => ChiSource::Marginalized,
        other => return Err(PyValueError::new_err(format!("unknown chi source `{other}`"))),
    };
    let r = sampling::estimate(
        &table,
        EstimateOptions {
            sign_mode: parse(sign_mode)?,
            chi_source,
        },
    )
    .map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
fn significance(value: f64, standard_error: f64, bound: f64) -> PyResult<f64> {
    sampling::significance(value, standard_error, bound).map_err(py_err)
}

/// Exact marginal deviations across settings.
#[pyfunction]
#[pyo3(signature = (noise=None))]
fn no_signaling<'py>(py: Python<'py>, noise: Option<PyRef<'py, PyNoiseModel>>) -> PyResult<Bound<'py, PyAny>> {
    let (state, engine) = model_or_ideal(noise).prepare().map_err(py_err)?;
    to_py(py, &engine.no_signaling_report(&state).map_err(py_err)?)
}

/// Observables, sequences and S-terms.
#[pyfunction]
fn registry<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pmnl::model::registry_document())
}

/// Runs a scenario config (dict or JSON) and returns the report.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let text: String = if let Ok(s) = config.extract::<String>() {
        s
    } else {
        py.import("json")?.call_method1("dumps", (config,))?.extract()?
    };
    let config = ScenarioConfig::from_json(&text).map_err(py_err)?;
    to_py(py, &scenario::run_scenario(&config).map_err(py_err)?)
}

#[pymodule]
#[pyo3(name = "pmnl")]
fn pmnl_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNoiseModel>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_plan, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(significance, m)?)?;
    m.add_function(wrap_pyfunction!(no_signaling, m)?)?;
    m.add_function(wrap_pyfunction!(registry, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add("NCHV_BOUND", pmnl::sequential::NCHV_BOUND)?;
    m.add("LHV_BOUND", pmnl::sequential::LHV_BOUND)?;
    m.add("__version__", scenario::TOOL_VERSION)?;
    Ok(())
}
