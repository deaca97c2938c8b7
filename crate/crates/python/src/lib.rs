//! Python access to node tables, index plans, convergence studies and the
//! exactness suite. Structured results come back as JSON or CSV text so the
//! caller can parse them with the standard library.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sparsecoll::cli::study::plan_builder;
use sparsecoll::cli::tables::plan_report_json;
use sparsecoll::cli::{run_exactness, run_study, ExperimentConfig};
use sparsecoll::indexset::calibrate_xi;
use sparsecoll::nodes::NodeFamily;
use sparsecoll::rules1d::UniRule;
use sparsecoll::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Points and quadrature weights of level `m` of a node family.
#[pyfunction]
#[pyo3(signature = (family, m, a = 0.0))]
fn nodes(family: &str, m: usize, a: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let family = NodeFamily::parse(family, a).map_err(to_py)?;
    let rule = family.nodes(m).and_then(UniRule::new).map_err(to_py)?;
    Ok((rule.nodes.points, rule.weights))
}

/// Index plan of a TOML experiment, at threshold `xi` or calibrated to `budget`.
#[pyfunction]
#[pyo3(signature = (config_toml, xi = None, budget = None))]
fn index_plan(config_toml: &str, xi: Option<f64>, budget: Option<u64>) -> PyResult<String> {
    let config = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    let build = plan_builder(&config).map_err(to_py)?;
    let plan = match (xi, budget) {
        (Some(xi), None) => build(xi, None),
        (None, Some(n)) => calibrate_xi(n, config.study.cost, config.family(), &build).map(|(_, plan)| plan),
        _ => return Err(PyValueError::new_err("pass exactly one of xi and budget")),
    }
    .map_err(to_py)?;
    plan_report_json(&plan, config.family()).map_err(to_py)
}

/// Runs the convergence study of a TOML experiment and returns its summary JSON.
#[pyfunction]
fn study(py: Python<'_>, config_toml: &str) -> PyResult<String> {
    let config = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    py.allow_threads(|| run_study(&config)).map(|s| s.to_json()).map_err(to_py)
}

/// Exactness checks as `(name, passed, detail)` triples.
#[pyfunction]
fn exactness(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.allow_threads(run_exactness)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn sparsecoll_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(nodes, m)?)?;
    m.add_function(wrap_pyfunction!(index_plan, m)?)?;
    m.add_function(wrap_pyfunction!(study, m)?)?;
    m.add_function(wrap_pyfunction!(exactness, m)?)?;
    Ok(())
}
