//! Python bindings for the `confocal` crate.

use std::collections::BTreeMap;

use confocal::cli;
use confocal::elliptic::{self, EllipticPoint};
use confocal::family::Point;
use confocal::threads;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Run an experiment and return its `report_v1` JSON text.
///
/// `overrides` maps configuration keys to values written as in a config
/// file, e.g. `{"axes": "[3, 2, 1]", "samples": "16"}`.
#[pyfunction]
#[pyo3(signature = (experiment, overrides=None, seed=None, tol=None))]
fn run_experiment(experiment: &str, overrides: Option<BTreeMap<String, String>>, seed: Option<u64>, tol: Option<f64>) -> PyResult<String> {
    let overrides: Vec<(String, String)> = overrides.unwrap_or_default().into_iter().collect();
    let config = cli::configure(experiment, None, &overrides, seed, tol).map_err(value_error)?;
    Ok(cli::run(&config).0.to_json())
}

/// Names of the available experiments.
#[pyfunction]
fn experiments() -> Vec<&'static str> {
    cli::EXPERIMENTS.to_vec()
}

/// Tangent lengths minus the arc of the inner ellipse, seen from the
/// vertex on the confocal ellipse `z` at eccentric angle `theta0`.
#[pyfunction]
fn graves_excess(a1: f64, a2: f64, z: f64, theta0: f64) -> PyResult<f64> {
    threads::graves_excess(a1, a2, z, theta0).map_err(value_error)
}

/// Elliptic coordinates `(u, signs)` of a point in space.
#[pyfunction]
fn to_elliptic(axes: [f64; 3], x: [f64; 3]) -> PyResult<([f64; 3], [f64; 3])> {
    let p = elliptic::to_elliptic(axes, &Point::from_row_slice(&x)).map_err(value_error)?;
    Ok((p.u, p.signs))
}

/// Cartesian point with elliptic coordinates `u` in the octant `signs`.
#[pyfunction]
#[pyo3(signature = (axes, u, signs=[1.0, 1.0, 1.0]))]
fn to_cartesian(axes: [f64; 3], u: [f64; 3], signs: [f64; 3]) -> PyResult<[f64; 3]> {
    let x = elliptic::to_cartesian(axes, &EllipticPoint::new(u, signs)).map_err(value_error)?;
    Ok([x[0], x[1], x[2]])
}

/// Staude thread through the pen at `azimuth`: `(length, joint_defect, slack)`.
#[pyfunction]
#[pyo3(signature = (axes, u2_0, u3_0, u3_1, azimuth=0.1))]
fn staude_thread(axes: [f64; 3], u2_0: f64, u3_0: f64, u3_1: f64, azimuth: f64) -> PyResult<(f64, f64, f64)> {
    let t = threads::assemble_staude_thread(axes, u2_0, u3_0, u3_1, azimuth).map_err(value_error)?;
    Ok((t.total_length, t.joint_defect, t.slack))
}

#[pymodule]
fn pyconfocal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add_function(wrap_pyfunction!(graves_excess, m)?)?;
    m.add_function(wrap_pyfunction!(to_elliptic, m)?)?;
    m.add_function(wrap_pyfunction!(to_cartesian, m)?)?;
    m.add_function(wrap_pyfunction!(staude_thread, m)?)?;
    Ok(())
}
