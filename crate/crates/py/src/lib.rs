//! Python bindings for the `aniso-taylor` library.

use aniso_taylor as at;
use pyo3::create_exception;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(aniso_taylor_py, HypothesisError, PyValueError);
create_exception!(aniso_taylor_py, InfeasibleError, PyValueError);
create_exception!(aniso_taylor_py, FormatError, PyValueError);

fn to_py(e: at::Error) -> PyErr {
    match e {
        at::Error::Hypothesis(_) | at::Error::WeightNotDecaying { .. } | at::Error::Divergent(_) => {
            HypothesisError::new_err(e.to_string())
        }
        at::Error::Infeasible(_) | at::Error::BudgetExceeded { .. } => {
            InfeasibleError::new_err(e.to_string())
        }
        at::Error::Format(_) => FormatError::new_err(e.to_string()),
        at::Error::OutsideCube { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    FormatError::new_err(e.to_string())
}

/// Converts a serializable value to plain Python objects.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_tail(tail: &str) -> PyResult<at::TailConvention> {
    match tail {
        "truncated" => Ok(at::TailConvention::Truncated),
        "infinite" => Ok(at::TailConvention::Infinite),
        other => Err(PyValueError::new_err(format!(
            "tail must be \"truncated\" or \"infinite\", got {other:?}"
        ))),
    }
}

#[pyclass(name = "WeightSequence", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeights(at::WeightSequence);

#[pymethods]
impl PyWeights {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        at::WeightSequence::explicit(values).map(Self).map_err(to_py)
    }

    /// `rho_j = m * j^s` for `j = 1..d`.
    #[staticmethod]
    #[pyo3(signature = (m, s, d, tail = "infinite"))]
    fn power(m: f64, s: f64, d: usize, tail: &str) -> PyResult<Self> {
        let w = at::WeightSequence::power(m, s, d).map_err(to_py)?;
        Ok(Self(w.with_tail(parse_tail(tail)?)))
    }

    /// `rho_j = m * g^j` for `j = 1..d`.
    #[staticmethod]
    #[pyo3(signature = (m, g, d, tail = "infinite"))]
    fn geometric(m: f64, g: f64, d: usize, tail: &str) -> PyResult<Self> {
        let w = at::WeightSequence::geometric(m, g, d).map_err(to_py)?;
        Ok(Self(w.with_tail(parse_tail(tail)?)))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn is_nondecreasing(&self) -> bool {
        self.0.is_nondecreasing()
    }

    fn inverse_lq_norm(&self, q: f64) -> f64 {
        self.0.inverse_lq_norm(q)
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!("WeightSequence({:?})", self.0.values())
    }
}

#[pyclass(name = "ExponentProfile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile(at::ExponentProfile);

#[pymethods]
impl PyProfile {
    /// `p` may be `float("inf")`.
    #[new]
    fn new(p: f64, q: f64) -> PyResult<Self> {
        at::ExponentProfile::new(p, q).map(Self).map_err(to_py)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.0.q()
    }

    #[getter]
    fn p_conjugate(&self) -> f64 {
        self.0.p_conjugate()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    #[getter]
    fn q_theta(&self) -> f64 {
        self.0.q_theta()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    fn __repr__(&self) -> String {
        format!("ExponentProfile(p={}, q={})", self.0.p(), self.0.q())
    }
}

#[pyclass(name = "TaylorModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel(at::TaylorModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (rho, amplitudes = None))]
    fn separable_rational(rho: &PyWeights, amplitudes: Option<Vec<f64>>) -> PyResult<Self> {
        let spec = at::ModelSpec::SeparableRational {
            rho: rho.0.clone(),
            amplitudes,
        };
        at::TaylorModel::from_spec(spec).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (rho, scale, amplitudes = None))]
    fn scaled_separable(rho: &PyWeights, scale: f64, amplitudes: Option<Vec<f64>>) -> PyResult<Self> {
        let spec = at::ModelSpec::ScaledSeparable {
            rho: rho.0.clone(),
            scale,
            amplitudes,
        };
        at::TaylorModel::from_spec(spec).map(Self).map_err(to_py)
    }

    /// Builds any model from its JSON spec, e.g. a `finite-polynomial`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: at::ModelSpec = serde_json::from_str(text).map_err(json_err)?;
        at::TaylorModel::from_spec(spec).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(self.0.spec()).map_err(json_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.0.output_dim()
    }

    #[getter]
    fn rho(&self) -> PyWeights {
        PyWeights(self.0.rho().clone())
    }

    fn evaluate(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.evaluate(&y).map_err(to_py)
    }

    /// Taylor coefficient at the multi-index given densely.
    fn coeff(&self, nu: Vec<u32>) -> Vec<f64> {
        self.0.coeff(&at::MultiIndex::from_dense(nu))
    }

    /// `(lower, upper)` bracket of the weighted class norm.
    fn class_norm(&self, w: &PyWeights, p: f64) -> PyResult<(f64, f64)> {
        let n = self.0.class_norm(&w.0, p).map_err(to_py)?;
        Ok((n.lower, n.upper))
    }
}

#[pyclass(name = "SurrogateLibrary", frozen)]
struct PyLibrary(at::SurrogateLibrary);

#[pymethods]
impl PyLibrary {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        at::SurrogateLibrary::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    fn query(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.query(&y).map_err(to_py)
    }

    fn locate(&self, y: Vec<f64>) -> PyResult<usize> {
        self.0.locate(&y).map_err(to_py)
    }

    /// `"single-cell"` or `"partition-needed"`.
    #[getter]
    fn outcome(&self) -> &'static str {
        match self.0.gate {
            at::GateOutcome::SingleCell { .. } => "single-cell",
            at::GateOutcome::PartitionNeeded { .. } => "partition-needed",
        }
    }

    #[getter]
    fn j(&self) -> usize {
        self.0.grid.j
    }

    #[getter]
    fn eta(&self) -> Option<f64> {
        self.0.grid.eta
    }

    #[getter]
    fn sigma(&self) -> Option<f64> {
        self.0.grid.sigma
    }

    #[getter]
    fn ks(&self) -> Vec<usize> {
        self.0.grid.ks()
    }

    #[getter]
    fn bound_on_n(&self) -> f64 {
        self.0.grid.bound_on_n
    }

    /// Center and halfwidths of every cell, in storage order.
    fn cells(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let d = self.0.dim;
        self.0
            .locals
            .iter()
            .map(|l| {
                let c = l.cell.center_in(d);
                let h = (0..d).map(|j| l.cell.halfwidth(j)).collect();
                (c, h)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// First `count` indices of the best-first order, as dense tuples.
#[pyfunction]
fn top_terms(rho: &PyWeights, count: usize, d: usize) -> PyResult<Vec<Vec<u32>>> {
    let set = at::top_terms(&rho.0, count, d).map_err(to_py)?;
    Ok(set.iter().map(|nu| nu.dense(d)).collect())
}

#[pyfunction]
fn beta_constant(rho_min: f64, q: f64) -> PyResult<f64> {
    at::beta_constant(rho_min, q).map_err(to_py)
}

#[pyfunction]
fn c_constant(rho: &PyWeights, q: f64) -> PyResult<f64> {
    at::c_constant(&rho.0, q).map_err(to_py)
}

#[pyfunction]
fn kappa_of(rho: &PyWeights, profile: &PyProfile) -> PyWeights {
    PyWeights(at::kappa_of(&rho.0, &profile.0))
}

#[pyfunction]
fn global_bound<'py>(
    py: Python<'py>,
    norm: f64,
    rho: &PyWeights,
    profile: &PyProfile,
    m: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = at::global_bound(norm, &rho.0, &profile.0, m).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn global_kappa_bound<'py>(
    py: Python<'py>,
    norm: f64,
    rho: &PyWeights,
    profile: &PyProfile,
    m: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = at::global_kappa_bound(norm, &rho.0, &profile.0, m).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn local_bound_v2<'py>(
    py: Python<'py>,
    norm: f64,
    rho: &PyWeights,
    profile: &PyProfile,
    center: Vec<f64>,
    halfwidths: Vec<f64>,
    m: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cell = at::Cell::new(center, halfwidths).map_err(to_py)?;
    let r = at::local_bound_v2(norm, &rho.0, &profile.0, &cell, m).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
fn compare_bounds<'py>(
    py: Python<'py>,
    model: &PyModel,
    profile: &PyProfile,
    m: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = at::compare_bounds(&model.0, model.0.rho(), &profile.0, m).map_err(to_py)?;
    to_object(py, &r)
}

#[pyfunction]
#[pyo3(signature = (model, profile, eps, m, max_cells = at::surrogate::DEFAULT_MAX_CELLS))]
fn build_library(
    py: Python<'_>,
    model: &PyModel,
    profile: &PyProfile,
    eps: f64,
    m: u64,
    max_cells: u64,
) -> PyResult<PyLibrary> {
    let options = at::surrogate::BuildOptions { max_cells };
    py.detach(|| at::surrogate::build_library_with(&model.0, &profile.0, eps, m, options))
        .map(PyLibrary)
        .map_err(to_py)
}

#[pyfunction]
fn certify<'py>(
    py: Python<'py>,
    library: &PyLibrary,
    model: &PyModel,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| at::certify(&library.0, &model.0, samples, seed))
        .map_err(to_py)?;
    to_object(py, &r)
}

#[pymodule]
fn aniso_taylor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HypothesisError", py.get_type::<HypothesisError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add("FormatError", py.get_type::<FormatError>())?;
    m.add_class::<PyWeights>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyLibrary>()?;
    m.add_function(wrap_pyfunction!(top_terms, m)?)?;
    m.add_function(wrap_pyfunction!(beta_constant, m)?)?;
    m.add_function(wrap_pyfunction!(c_constant, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_of, m)?)?;
    m.add_function(wrap_pyfunction!(global_bound, m)?)?;
    m.add_function(wrap_pyfunction!(global_kappa_bound, m)?)?;
    m.add_function(wrap_pyfunction!(local_bound_v2, m)?)?;
    m.add_function(wrap_pyfunction!(compare_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(build_library, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    Ok(())
}
