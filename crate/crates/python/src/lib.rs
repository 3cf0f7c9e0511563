//! Python bindings: manufactured cases, the direct and inverse solvers, the
//! theorem constants and the Mittag-Leffler function.

use fracinv_core::forward::synthesize_data;
use fracinv_core::problem::Trace;
use fracinv_core::verify::{h_error, u_error, StudyTarget};
use fracinv_core::{self as core, Error, ProblemParams};
use ndarray::Array2;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Problem and grid parameters.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
pub struct PyParams {
    #[pyo3(get, set)]
    pub alpha: f64,
    #[pyo3(get, set)]
    pub t_final: f64,
    #[pyo3(get, set)]
    pub l0: f64,
    #[pyo3(get, set)]
    pub modes: usize,
    #[pyo3(get, set)]
    pub epsilon: f64,
    #[pyo3(get, set)]
    pub nt: usize,
    #[pyo3(get, set)]
    pub nx: usize,
    #[pyo3(get, set)]
    pub ny: usize,
}

impl From<ProblemParams> for PyParams {
    fn from(p: ProblemParams) -> Self {
        Self {
            alpha: p.alpha,
            t_final: p.t_final,
            l0: p.l0,
            modes: p.modes,
            epsilon: p.epsilon,
            nt: p.nt,
            nx: p.nx,
            ny: p.ny,
        }
    }
}

impl From<&PyParams> for ProblemParams {
    fn from(p: &PyParams) -> Self {
        Self {
            alpha: p.alpha,
            t_final: p.t_final,
            l0: p.l0,
            modes: p.modes,
            epsilon: p.epsilon,
            nt: p.nt,
            nx: p.nx,
            ny: p.ny,
        }
    }
}

#[pymethods]
impl PyParams {
    fn validate(&self) -> PyResult<()> {
        ProblemParams::from(self).validate().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(alpha={}, t_final={}, l0={}, modes={}, epsilon={}, nt={}, nx={}, ny={})",
            self.alpha, self.t_final, self.l0, self.modes, self.epsilon, self.nt, self.nx, self.ny
        )
    }
}

/// A manufactured case (`MMS-0`, `MMS-1`, `MMS-2`).
#[pyclass(name = "Case")]
pub struct PyCase {
    inner: core::ManufacturedCase,
}

#[pymethods]
impl PyCase {
    #[new]
    #[pyo3(signature = (id, params = None))]
    fn new(id: &str, params: Option<PyParams>) -> PyResult<Self> {
        let mut inner = core::manufactured_case(id).map_err(to_py)?;
        if let Some(p) = params {
            inner = inner.with_params(ProblemParams::from(&p)).map_err(to_py)?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn params(&self) -> PyParams {
        self.inner.params().into()
    }

    fn exact_u(&self, t: f64, x: f64, y: f64) -> f64 {
        (self.inner.exact_u)(t, x, y)
    }

    fn exact_h(&self, t: f64, x: f64) -> f64 {
        (self.inner.exact_h)(t, x)
    }

    /// Equation residual of the exact solution at a point.
    fn residual(&self, t: f64, x: f64, y: f64) -> f64 {
        self.inner.residual(t, x, y)
    }

    /// Trace `psi` on the `(t, x)` grid, as rows.
    fn psi(&self) -> PyResult<Vec<Vec<f64>>> {
        let grid = self
            .inner
            .spec
            .psi_grid()
            .map_err(to_py)?
            .ok_or_else(|| PyValueError::new_err("case has no trace"))?;
        Ok(to_rows(&grid))
    }
}

/// Output of the direct solver.
#[pyclass(name = "ForwardSolution")]
pub struct PyForward {
    field: core::FullField,
    l0: f64,
    #[pyo3(get)]
    u_error: f64,
    #[pyo3(get)]
    u_relative_error: f64,
}

#[pymethods]
impl PyForward {
    /// `u(t, x, y)` on the `(t, x)` grid, as rows.
    fn trace(&self, y: f64) -> Vec<Vec<f64>> {
        to_rows(&self.field.trace(y))
    }

    /// Trace on the observation plane, with optional seeded noise.
    #[pyo3(signature = (noise_level = 0.0, seed = 0))]
    fn synthesize(&self, noise_level: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        synthesize_data(&self.field.state, self.l0, noise_level, seed)
            .map(|a| to_rows(&a))
            .map_err(to_py)
    }

    fn mode(&self, k: usize) -> PyResult<Vec<Vec<f64>>> {
        self.field
            .state
            .modes
            .get(k.wrapping_sub(1))
            .map(|m| to_rows(&m.values))
            .ok_or_else(|| {
                PyValueError::new_err(format!(
                    "mode index must lie in 1..={}",
                    self.field.state.modes.len()
                ))
            })
    }
}

/// Output of the inverse solver.
#[pyclass(name = "InverseSolution")]
pub struct PyInverse {
    outcome: core::InverseOutcome,
    #[pyo3(get)]
    h_error: f64,
    #[pyo3(get)]
    h_relative_error: f64,
}

#[pymethods]
impl PyInverse {
    #[getter]
    fn h(&self) -> Vec<Vec<f64>> {
        to_rows(&self.outcome.source.h)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.outcome.report.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.outcome.report.iterations
    }

    #[getter]
    fn increments(&self) -> Vec<f64> {
        self.outcome.report.increments.clone()
    }

    #[getter]
    fn ratios(&self) -> Vec<f64> {
        self.outcome.report.ratios.clone()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.outcome.source.residual
    }

    /// Convergence report as JSON.
    fn report_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.outcome.report)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pyfunction]
fn solve_forward(case: &PyCase) -> PyResult<PyForward> {
    let (state, field) = core::solve_forward(&case.inner.spec).map_err(to_py)?;
    let (u_error, u_relative_error) = u_error(&case.inner, &state).map_err(to_py)?;
    Ok(PyForward {
        field,
        l0: case.inner.params().l0,
        u_error,
        u_relative_error,
    })
}

/// Recovers `h` from the case's trace, or from `psi` rows when given.
#[pyfunction]
#[pyo3(signature = (case, tol = core::inverse::DEFAULT_TOL, max_iter = core::inverse::DEFAULT_MAX_ITER, psi = None))]
fn solve_inverse(
    case: &PyCase,
    tol: f64,
    max_iter: usize,
    psi: Option<Vec<Vec<f64>>>,
) -> PyResult<PyInverse> {
    let mut spec = case.inner.spec.clone();
    if let Some(rows) = psi {
        let p = spec.params;
        if rows.len() != p.nt || rows.iter().any(|r| r.len() != p.nx) {
            return Err(PyValueError::new_err(format!(
                "psi must be {}x{}",
                p.nt, p.nx
            )));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let grid = Array2::from_shape_vec((p.nt, p.nx), flat)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.psi = Some(Trace::Sampled(grid));
        spec.derivatives.psi_caputo = None;
        spec.derivatives.psi_xx = None;
    }
    let outcome = core::solve_inverse(&spec, tol, max_iter).map_err(to_py)?;
    let (h_error, h_relative_error) = h_error(&case.inner, &outcome.source);
    Ok(PyInverse {
        outcome,
        h_error,
        h_relative_error,
    })
}

/// Theorem constants of the case as JSON.
#[pyfunction]
fn compute_constants(case: &PyCase) -> PyResult<String> {
    let report = core::compute_constants(&case.inner.spec).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Refinement study as JSON; `target` is `"forward"` or `"inverse"`.
#[pyfunction]
#[pyo3(signature = (case, ladder, target = "forward"))]
fn convergence_study(case: &PyCase, ladder: Vec<(usize, usize)>, target: &str) -> PyResult<String> {
    let target = match target {
        "forward" => StudyTarget::Forward,
        "inverse" => StudyTarget::Inverse,
        other => return Err(PyValueError::new_err(format!("unknown target `{other}`"))),
    };
    let study = core::convergence_study(&case.inner, &ladder, target).map_err(to_py)?;
    serde_json::to_string(&study).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (alpha, z, mu = 1.0))]
fn mittag_leffler(alpha: f64, z: f64, mu: f64) -> PyResult<f64> {
    let p = core::MLParams::new(alpha, mu).map_err(to_py)?;
    core::mittag_leffler(p, z).map_err(to_py)
}

#[pymodule]
fn fracinv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyCase>()?;
    m.add_class::<PyForward>()?;
    m.add_class::<PyInverse>()?;
    m.add_function(wrap_pyfunction!(solve_forward, m)?)?;
    m.add_function(wrap_pyfunction!(solve_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(compute_constants, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    Ok(())
}
