// SPDX-License-Identifier: Apache-2.0

//! Python module `qng`. Structured results come back as plain dicts and
//! lists; domain errors raise `ValueError`, numerical failures
//! `RuntimeError`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use qng_core::channels;
use qng_core::fock::{self, DensityMatrix, FockPair, GaussianParams};
use qng_core::optimizer;
use qng_core::ramsey::{self, NoiseConfig, RunOptions, ScanOptions};
use qng_core::thresholds::{self, ThresholdKind, ThresholdStore};
use qng_core::QngError;

fn err(e: QngError) -> PyErr {
    match e {
        QngError::UnsupportedOrder { .. }
        | QngError::InvalidPair { .. }
        | QngError::OutOfRange(_)
        | QngError::InvalidState(_)
        | QngError::InvalidSearch(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn pair(m: usize, n: usize) -> PyResult<FockPair> {
    FockPair::new(m, n).map_err(err)
}

fn kind(name: &str) -> PyResult<ThresholdKind> {
    name.parse().map_err(err)
}

/// Full threshold result for `kind` on the pair `(m, n)`.
#[pyfunction]
fn threshold(py: Python<'_>, kind_name: &str, m: usize, n: usize) -> PyResult<Py<PyAny>> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    let result = py
        .detach(|| ThresholdStore::global().get(k, p))
        .map_err(err)?;
    to_py(py, &result)
}

#[pyfunction]
fn threshold_value(py: Python<'_>, kind_name: &str, m: usize, n: usize) -> PyResult<f64> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    py.detach(|| ThresholdStore::global().value(k, p))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, n, measured, uncertainty = 0.0))]
fn certify(
    py: Python<'_>,
    m: usize,
    n: usize,
    measured: f64,
    uncertainty: f64,
) -> PyResult<Py<PyAny>> {
    let p = pair(m, n)?;
    let report = py
        .detach(|| thresholds::certify(p, measured, uncertainty))
        .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (measured, m, n, kind_name = "genuine-n"))]
fn depth(
    py: Python<'_>,
    measured: f64,
    m: usize,
    n: usize,
    kind_name: &str,
) -> PyResult<Py<PyAny>> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    let result = py.detach(|| channels::depth(measured, p, k)).map_err(err)?;
    to_py(py, &result)
}

/// `C_{m,n} = 2|ρ_mn|` of a square density matrix given as nested rows.
#[pyfunction]
fn coherence(rows: Vec<Vec<Complex64>>, m: usize, n: usize) -> PyResult<f64> {
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("density matrix must be square"));
    }
    let rho = DensityMatrix::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j])).map_err(err)?;
    Ok(fock::coherence_quantifier(&rho, pair(m, n)?))
}

/// `⟨m|S(ξ)D(α)|n⟩`.
#[pyfunction]
fn sdf_amplitude(
    m: usize,
    n: usize,
    xi_mag: f64,
    xi_phase: f64,
    alpha_mag: f64,
    alpha_phase: f64,
) -> PyResult<Complex64> {
    let g = GaussianParams::new(xi_mag, xi_phase, alpha_mag, alpha_phase).map_err(err)?;
    fock::sdf_amplitude(m, n, &g).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kind_name, m, n, samples = 100_000, seed = 0))]
fn mc_verify(
    py: Python<'_>,
    kind_name: &str,
    m: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    let report = py
        .detach(|| optimizer::mc_verify(k, p, samples, seed))
        .map_err(err)?;
    to_py(py, &report)
}

/// `(t, depth)` of the ideal state heated for each time in `times`.
#[pyfunction]
#[pyo3(signature = (m, n, heating_rate, times, kind_name = "genuine-n"))]
fn thermal_depth_limit(
    py: Python<'_>,
    m: usize,
    n: usize,
    heating_rate: f64,
    times: Vec<f64>,
    kind_name: &str,
) -> PyResult<Vec<(f64, f64)>> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    py.detach(|| channels::thermal_depth_limit(p, heating_rate, &times, k))
        .map_err(err)
}

/// Ramsey decay scan; returns one dict per delay.
#[pyfunction]
#[pyo3(signature = (
    m, n, delays, *,
    heating_rate = 0.0, dephasing_rate = 0.0, initial_thermal_nbar = 0.0, pulse_error = 0.0,
    kind_name = "genuine-n", phases = 16, shots = None, seed = 0, dim = None,
))]
#[allow(clippy::too_many_arguments)]
fn decay_scan(
    py: Python<'_>,
    m: usize,
    n: usize,
    delays: Vec<f64>,
    heating_rate: f64,
    dephasing_rate: f64,
    initial_thermal_nbar: f64,
    pulse_error: f64,
    kind_name: &str,
    phases: usize,
    shots: Option<u64>,
    seed: u64,
    dim: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let (k, p) = (kind(kind_name)?, pair(m, n)?);
    let noise = NoiseConfig {
        heating_rate,
        dephasing_rate,
        initial_thermal_nbar,
        pulse_error,
        ..NoiseConfig::default()
    };
    noise.validate().map_err(err)?;
    let opts = ScanOptions {
        phases,
        run: RunOptions { dim, shots, seed },
    };
    let points = py
        .detach(|| ramsey::decay_scan(p, &delays, &noise, k, &opts))
        .map_err(err)?;
    to_py(py, &points)
}

#[pymodule]
fn qng(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add(
        "THRESHOLD_KINDS",
        ThresholdKind::ALL
            .iter()
            .map(|k| k.as_str())
            .collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_value, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(depth, m)?)?;
    m.add_function(wrap_pyfunction!(coherence, m)?)?;
    m.add_function(wrap_pyfunction!(sdf_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(mc_verify, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_depth_limit, m)?)?;
    m.add_function(wrap_pyfunction!(decay_scan, m)?)?;
    Ok(())
}
