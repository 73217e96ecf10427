//! Python module `pylambda_surfaces`. Results come back as plain dicts and
//! lists mirroring the JSON the CLI writes.

use lambda_surfaces::cli::{self, CommonArgs, RunConfig};
use lambda_surfaces::integrator::IntegratorConfig;
use lambda_surfaces::shooting::{self, DEFAULT_GRID_COUNT, DEFAULT_LOG_COUNT, DEFAULT_ROOT_TOL};
use lambda_surfaces::{geometry, linearization, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::InvalidParams(_) | Error::Config(_) | Error::Unsupported(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(f)) => f.into_pyobject(py)?.into_any(),
            _ => return Err(PyValueError::new_err(format!("unrepresentable number {n}"))),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn serialize<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// Problem parameters `(n, lambda)` and their derived constants.
#[pyclass(name = "Params", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyParams(lambda_surfaces::Params);

#[pymethods]
impl PyParams {
    #[new]
    fn new(n: u32, lambda: f64) -> PyResult<Self> {
        lambda_surfaces::Params::new(n, lambda).map(PyParams).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn sphere_radius(&self) -> f64 {
        self.0.sphere_radius()
    }

    #[getter]
    fn cylinder_radius(&self) -> f64 {
        self.0.cylinder_radius()
    }

    #[getter]
    fn a_coefficient(&self) -> f64 {
        self.0.a_coefficient()
    }

    #[getter]
    fn theorem_lambda_min(&self) -> f64 {
        self.0.theorem_lambda_min()
    }

    fn in_theorem_range(&self) -> bool {
        self.0.in_theorem_range()
    }

    fn __repr__(&self) -> String {
        format!("Params(n={}, lambda={})", self.0.n, self.0.lambda)
    }
}

fn integrator(rel_tol: Option<f64>, abs_tol: Option<f64>, max_step: Option<f64>) -> IntegratorConfig {
    let d = IntegratorConfig::default();
    IntegratorConfig {
        rel_tol: rel_tol.unwrap_or(d.rel_tol),
        abs_tol: abs_tol.unwrap_or(d.abs_tol),
        max_step: max_step.unwrap_or(d.max_step),
        ..d
    }
}

/// One shot from the axis point `(x0, 0)`.
#[pyfunction]
#[pyo3(signature = (p, x0, rel_tol=None, abs_tol=None, max_step=None))]
fn shoot<'py>(
    py: Python<'py>,
    p: &PyParams,
    x0: f64,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_step: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = integrator(rel_tol, abs_tol, max_step);
    let out = py.detach(|| shooting::shoot(&p.0, x0, &cfg)).map_err(py_err)?;
    serialize(py, &out)
}

/// Grid scan of the shooting map. Without `lo`/`hi` the default
/// log+linear offset grid is used.
#[pyfunction]
#[pyo3(signature = (p, lo=None, hi=None, grid_count=DEFAULT_GRID_COUNT, log_count=DEFAULT_LOG_COUNT, jobs=0))]
fn scan<'py>(
    py: Python<'py>,
    p: &PyParams,
    lo: Option<f64>,
    hi: Option<f64>,
    grid_count: usize,
    log_count: usize,
    jobs: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = IntegratorConfig::default();
    let res = py
        .detach(|| match (lo, hi) {
            (Some(lo), Some(hi)) => shooting::scan_roots(&p.0, lo, hi, grid_count, &cfg),
            (None, None) => {
                let offsets = shooting::default_offsets(&p.0, grid_count, log_count);
                shooting::scan_offsets(&p.0, &offsets, &cfg, jobs, DEFAULT_ROOT_TOL)
            }
            _ => Err(Error::Domain("give both lo and hi, or neither".into())),
        })
        .map_err(py_err)?;
    serialize(py, &res)
}

/// Bisection on `x*` over an `x0` bracket.
#[pyfunction]
#[pyo3(signature = (p, lo, hi, tol=DEFAULT_ROOT_TOL))]
fn find_root<'py>(py: Python<'py>, p: &PyParams, lo: f64, hi: f64, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = IntegratorConfig::default();
    let root = py.detach(|| shooting::find_root(&p.0, (lo, hi), tol, &cfg)).map_err(py_err)?;
    serialize(py, &root)
}

/// Full pipeline: scan, bisect every bracket, close and certify the profiles.
/// Returns `(summary, profiles)`.
#[pyfunction]
#[pyo3(signature = (p, grid_count=None, log_count=None, jobs=None))]
fn solve<'py>(
    py: Python<'py>,
    p: &PyParams,
    grid_count: Option<usize>,
    log_count: Option<usize>,
    jobs: Option<usize>,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let flags = CommonArgs {
        n: Some(p.0.n),
        lambda: Some(p.0.lambda),
        grid_count,
        log_count,
        jobs,
        ..CommonArgs::default()
    };
    let cfg = RunConfig::resolve(&flags).map_err(py_err)?;
    let solved = py.detach(|| cli::solve_profiles(&cfg, None)).map_err(py_err)?;
    Ok((serialize(py, &solved.summary)?, serialize(py, &solved.profiles)?))
}

/// Near-plane quantitative bounds for the shot at offset `epsilon`.
#[pyfunction]
fn verify_bounds<'py>(py: Python<'py>, p: &PyParams, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let cfg = IntegratorConfig::default();
    let rep = py.detach(|| shooting::verify_bounds(&p.0, epsilon, &cfg)).map_err(py_err)?;
    serialize(py, &rep)
}

#[pyfunction]
#[pyo3(signature = (p, r_max=None))]
fn plane_linearization<'py>(py: Python<'py>, p: &PyParams, r_max: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let r_max = r_max.unwrap_or_else(|| (2.0 * p.0.nf()).sqrt());
    let lin = linearization::solve_plane_linearization(&p.0, r_max, &IntegratorConfig::default()).map_err(py_err)?;
    serialize(py, &lin)
}

#[pyfunction]
fn sphere_linearization<'py>(py: Python<'py>, p: &PyParams) -> PyResult<Bound<'py, PyAny>> {
    let lin = linearization::solve_sphere_linearization(&p.0, &IntegratorConfig::default()).map_err(py_err)?;
    serialize(py, &lin)
}

/// `(dw/dxi, d2w/dxi2, d3w/dxi3)` of the sphere-side solution at `xi = 1`.
#[pyfunction]
fn endpoint_derivatives(p: &PyParams) -> (f64, f64, f64) {
    linearization::endpoint_derivatives(&p.0)
}

/// Maximum deviation between the central difference and the linearized solution.
#[pyfunction]
#[pyo3(signature = (p, epsilon, side="plane"))]
fn finite_difference_check(p: &PyParams, epsilon: f64, side: &str) -> PyResult<f64> {
    let side = match side {
        "plane" => linearization::Side::Plane,
        "sphere" => linearization::Side::Sphere,
        other => return Err(PyValueError::new_err(format!("side must be 'plane' or 'sphere', got '{other}'"))),
    };
    linearization::finite_difference_check(&p.0, epsilon, side, &IntegratorConfig::default())
        .map(|c| c.max_deviation)
        .map_err(py_err)
}

/// OBJ text of the closed n = 2 surface whose profile leaves the axis at `x0`
/// (a root from `solve`, or the sphere radius).
#[pyfunction]
#[pyo3(signature = (p, x0, resolution=64))]
fn mesh_obj(p: &PyParams, x0: f64, resolution: usize) -> PyResult<String> {
    let cfg = IntegratorConfig::default();
    let root = shooting::root_at(&p.0, x0 + p.0.lambda, DEFAULT_ROOT_TOL, &cfg).map_err(py_err)?;
    let closed = shooting::assemble_closed_profile(&p.0, &root, &cfg).map_err(py_err)?;
    let profile = geometry::HypersurfaceProfile::from_closed(&closed);
    let mesh = geometry::revolve_mesh(&profile, resolution).map_err(py_err)?;
    Ok(mesh.to_obj())
}

#[pymodule]
fn pylambda_surfaces(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(shoot, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(find_root, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(plane_linearization, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_linearization, m)?)?;
    m.add_function(wrap_pyfunction!(endpoint_derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(finite_difference_check, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_obj, m)?)?;
    Ok(())
}
