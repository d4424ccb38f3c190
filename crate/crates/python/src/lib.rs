//! Python bindings. Matrices cross the boundary as nested lists of Python
//! `complex` (or `float` for real matrices); reports come back as dicts.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use ::qestkit as core;
use core::bounds::{holevo_bound_with, HolevoMethod, HolevoOptions, HolevoSolution, WeightMatrix};
use core::classify::{classify_points, classify_with, Grid, DEFAULT_TOL};
use core::cli::model_file::ModelFile;
use core::infogeo::{analyze, verify_identities, InfoMatrices, ScoreSet, DEFAULT_SEED};
use core::linalg::ComplexMatrix;
use core::model::{build_zoo_model, evaluate, zoo, Derivative, ModelPoint, ParametricModel};
use nalgebra::DMatrix;

create_exception!(qestkit, RegularityError, PyValueError);

fn to_py_err(e: core::Error) -> PyErr {
    if e.is_regularity_failure() {
        RegularityError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn real_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn complex_matrix(rows: &[Vec<Complex64>], what: &str) -> PyResult<ComplexMatrix> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!("{what} must be a non-empty square matrix")));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn weight(w: Option<Vec<Vec<f64>>>, n: usize) -> PyResult<WeightMatrix> {
    match w {
        None => Ok(WeightMatrix::identity(n)),
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(PyValueError::new_err(format!("weight must be {n}×{n}")));
            }
            WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).map_err(to_py_err)
        }
    }
}

fn method(name: &str) -> PyResult<HolevoMethod> {
    match name {
        "auto" => Ok(HolevoMethod::Auto),
        "numeric" => Ok(HolevoMethod::Numeric),
        "closed-form" | "closed_form" => Ok(HolevoMethod::ClosedForm),
        other => Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    }
}

/// A parametric family of states: a zoo model or one loaded from JSON.
#[pyclass(module = "qestkit", frozen)]
struct Model {
    inner: ParametricModel,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (name, params = None))]
    fn zoo(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let inner = build_zoo_model(name, &params.unwrap_or_default()).map_err(to_py_err)?;
        Ok(Model { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = ModelFile::from_json(text).and_then(|f| f.to_model()).map_err(to_py_err)?;
        Ok(Model { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        ModelFile::from_model(&self.inner).map(|f| f.to_json()).map_err(to_py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn params(&self) -> usize {
        self.inner.param_count()
    }

    fn point(&self, theta: Vec<f64>) -> PyResult<Point> {
        Point::build(evaluate(&self.inner, &theta, Derivative::Auto).map_err(to_py_err)?)
    }

    /// Classification over a grid such as `"0.1:0.4:4x0.1:0.4:4"`.
    #[pyo3(signature = (grid, tol = DEFAULT_TOL))]
    fn classify_grid(&self, py: Python<'_>, grid: &str, tol: f64) -> PyResult<Py<PyAny>> {
        let grid = Grid::parse(grid).map_err(to_py_err)?;
        let report = py.detach(|| classify_points(&self.inner, &grid.points(), tol)).map_err(to_py_err)?;
        serialize_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, dim={}, params={})", self.inner.name(), self.inner.dim(), self.inner.param_count())
    }
}

/// A model at one parameter value, with its logarithmic derivatives and
/// information matrices precomputed.
#[pyclass(module = "qestkit", frozen)]
struct Point {
    point: ModelPoint,
    scores: ScoreSet,
    mats: InfoMatrices,
}

impl Point {
    fn build(point: ModelPoint) -> PyResult<Self> {
        let (scores, mats) = analyze(&point).map_err(to_py_err)?;
        Ok(Point { point, scores, mats })
    }
}

#[pymethods]
impl Point {
    #[new]
    #[pyo3(signature = (rho, drho, theta = None))]
    fn new(rho: Vec<Vec<Complex64>>, drho: Vec<Vec<Vec<Complex64>>>, theta: Option<Vec<f64>>) -> PyResult<Self> {
        let rho = complex_matrix(&rho, "rho")?;
        let drho = drho
            .iter()
            .enumerate()
            .map(|(i, d)| complex_matrix(d, &format!("drho[{i}]")))
            .collect::<PyResult<Vec<_>>>()?;
        let theta = theta.unwrap_or_else(|| vec![0.0; drho.len()]);
        Point::build(ModelPoint::new(theta, rho, drho).map_err(to_py_err)?)
    }

    /// Random regular point with `n` parameters on a `d`-level system.
    #[staticmethod]
    #[pyo3(signature = (d, n, seed = DEFAULT_SEED))]
    fn random(d: usize, n: usize, seed: u64) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Point::build(core::random::random_point(&mut rng, d, n).map_err(to_py_err)?)
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.point.theta().to_vec()
    }

    #[getter]
    fn rho(&self) -> Vec<Vec<Complex64>> {
        complex_rows(self.point.rho().as_matrix())
    }

    #[getter]
    fn drho(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.point.drho().iter().map(|d| complex_rows(d.as_matrix())).collect()
    }

    /// Symmetric logarithmic derivatives `L_i`.
    fn sld(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.scores.slds.iter().map(|l| complex_rows(l.as_matrix())).collect()
    }

    /// Right logarithmic derivatives `ρ⁻¹∂ᵢρ`.
    fn rld(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.scores.rlds.iter().map(complex_rows).collect()
    }

    /// `(G, G̃)`: SLD and RLD Fisher information matrices.
    fn fisher(&self) -> (Vec<Vec<f64>>, Vec<Vec<Complex64>>) {
        (real_rows(&self.mats.g), complex_rows(&self.mats.gt))
    }

    /// `(Z, Z̃)`.
    fn z(&self) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        (complex_rows(&self.mats.z), complex_rows(&self.mats.zt))
    }

    #[pyo3(signature = (tol = DEFAULT_TOL))]
    fn classify(&self, py: Python<'_>, tol: f64) -> PyResult<Py<PyAny>> {
        serialize_to_py(py, &classify_with(&self.point, &self.scores, &self.mats, tol))
    }

    /// SLD, RLD and Holevo bounds for weight `w` (identity by default).
    #[pyo3(signature = (weight = None, method = "auto", tol = DEFAULT_TOL))]
    fn bounds(&self, py: Python<'_>, weight: Option<Vec<Vec<f64>>>, method: &str, tol: f64) -> PyResult<Py<PyAny>> {
        let w = self::weight(weight, self.point.param_count())?;
        let opts = HolevoOptions { method: self::method(method)?, tol_class: tol, ..Default::default() };
        let sol: HolevoSolution = py
            .detach(|| holevo_bound_with(&self.point, &self.scores, &self.mats, &w, &opts))
            .map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item("sld", sol.sld_bound)?;
        dict.set_item("rld", sol.rld_bound)?;
        dict.set_item("holevo", sol.value)?;
        dict.set_item("gap_vs_lower", sol.gap_vs_lower)?;
        dict.set_item("solved_by", serialize_to_py(py, &sol.solved_by)?)?;
        dict.set_item("converged", sol.converged)?;
        dict.set_item("evaluations", sol.evaluations)?;
        dict.set_item("h", complex_rows(&sol.h))?;
        dict.set_item("x", sol.x.iter().map(|x| complex_rows(x.as_matrix())).collect::<Vec<_>>())?;
        Ok(dict.into_any().unbind())
    }

    /// Runs the operator identity checks at this point.
    #[pyo3(signature = (tol = 1e-8, seed = DEFAULT_SEED))]
    fn verify(&self, py: Python<'_>, tol: f64, seed: u64) -> PyResult<Py<PyAny>> {
        let report = verify_identities(&self.point, &self.scores, &self.mats, tol, seed).map_err(to_py_err)?;
        serialize_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Point(dim={}, params={}, theta={:?})", self.point.dim(), self.point.param_count(), self.point.theta())
    }
}

/// Names of the built-in models.
#[pyfunction]
fn zoo_names() -> Vec<String> {
    zoo().into_iter().map(|e| e.name.to_string()).collect()
}

#[pymodule]
fn qestkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Point>()?;
    m.add_function(wrap_pyfunction!(zoo_names, m)?)?;
    m.add("RegularityError", m.py().get_type::<RegularityError>())?;
    Ok(())
}
