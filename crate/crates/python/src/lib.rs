//! Python bindings for `lrin`.
//!
//! Vectors are Python lists of floats and matrices are lists of rows.
//! Library errors surface as `ValueError`.

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lrin::gauges::{dual_norm_of, norm_of, NormFlavor, NormSpec};
use lrin::mat_prox;
use lrin::oracle;
use lrin::solvers::{self, ProblemSpec, SolverConfig};
use lrin::vec_prox::{self, SearchMode};
use lrin::LrinError;

fn py_err(e: LrinError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<SearchMode> {
    mode.parse().map_err(py_err)
}

fn parse_spec(flavor: &str, r: usize) -> PyResult<NormSpec> {
    let flavor: NormFlavor = flavor.parse().map_err(py_err)?;
    NormSpec::new(flavor, r).map_err(py_err)
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(PyValueError::new_err("matrix is empty"));
    }
    if let Some(k) = rows.iter().position(|row| row.len() != m) {
        return Err(PyValueError::new_err(format!(
            "row {k} has {} entries, expected {m}",
            rows[k].len()
        )));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn from_matrix(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter()
        .map(|row| row.iter().copied().collect())
        .collect()
}

/// `gamma * N(x)` or `(gamma / 2) * N(x)^2` for a low-rank inducing norm `N`.
#[pyclass(name = "ScaledNorm", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyScaledNorm {
    inner: lrin::ScaledNorm,
}

#[pymethods]
impl PyScaledNorm {
    #[new]
    #[pyo3(signature = (flavor, r, gamma = 1.0, squared = false))]
    fn new(flavor: &str, r: usize, gamma: f64, squared: bool) -> PyResult<Self> {
        let spec = parse_spec(flavor, r)?;
        Ok(PyScaledNorm {
            inner: lrin::ScaledNorm::new(spec, gamma, squared).map_err(py_err)?,
        })
    }

    #[getter]
    fn flavor(&self) -> String {
        self.inner.spec.flavor.to_string()
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.spec.r
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn squared(&self) -> bool {
        self.inner.squared
    }

    /// The scaled function value at a vector.
    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x).map_err(py_err)
    }

    /// Prox at a vector.
    #[pyo3(signature = (z, mode = "binary"))]
    fn prox(&self, z: Vec<f64>, mode: &str) -> PyResult<Vec<f64>> {
        Ok(vec_prox::prox_vec(&z, &self.inner, parse_mode(mode)?)
            .map_err(py_err)?
            .x)
    }

    /// Prox at a matrix; returns `(X, numerical_rank)`.
    #[pyo3(signature = (z, mode = "binary", rank_threshold = mat_prox::DEFAULT_RANK_THRESHOLD))]
    fn matrix_prox(
        &self,
        z: Vec<Vec<f64>>,
        mode: &str,
        rank_threshold: f64,
    ) -> PyResult<(Vec<Vec<f64>>, usize)> {
        let out = mat_prox::matrix_prox_with_threshold(
            &to_matrix(&z)?,
            &self.inner,
            parse_mode(mode)?,
            rank_threshold,
        )
        .map_err(py_err)?;
        Ok((from_matrix(&out.x), out.numerical_rank))
    }

    /// Optimality certificate of `x` as the prox at `z`; returns
    /// `(dual_residual, alignment_residual, pass)`.
    fn certify(&self, z: Vec<f64>, x: Vec<f64>) -> PyResult<(f64, f64, bool)> {
        let c = oracle::certify_prox(&z, &x, &self.inner).map_err(py_err)?;
        Ok((c.dual_residual, c.alignment_residual, c.pass))
    }

    fn __repr__(&self) -> String {
        format!(
            "ScaledNorm(flavor='{}', r={}, gamma={}, squared={})",
            self.inner.spec.flavor,
            self.inner.spec.r,
            self.inner.gamma,
            if self.inner.squared { "True" } else { "False" }
        )
    }
}

/// Norm of a vector.
#[pyfunction]
fn norm_value(z: Vec<f64>, flavor: &str, r: usize) -> PyResult<f64> {
    norm_of(&z, &parse_spec(flavor, r)?).map_err(py_err)
}

/// Dual norm (truncated gauge) of a vector.
#[pyfunction]
fn dual_norm_value(z: Vec<f64>, flavor: &str, r: usize) -> PyResult<f64> {
    dual_norm_of(&z, &parse_spec(flavor, r)?).map_err(py_err)
}

/// Norm of a matrix through its singular values.
#[pyfunction]
fn matrix_norm_value(z: Vec<Vec<f64>>, flavor: &str, r: usize) -> PyResult<f64> {
    mat_prox::matrix_norm_value(&to_matrix(&z)?, &parse_spec(flavor, r)?).map_err(py_err)
}

#[pyfunction]
fn singular_values(z: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    mat_prox::singular_values(&to_matrix(&z)?).map_err(py_err)
}

/// Projection onto `{w : l2 norm of the r largest |w_i| <= c}`.
#[pyfunction]
#[pyo3(signature = (z, r, c, mode = "binary"))]
fn project_truncated_l2_ball(z: Vec<f64>, r: usize, c: f64, mode: &str) -> PyResult<Vec<f64>> {
    Ok(
        vec_prox::project_truncated_l2_ball(&z, r, c, parse_mode(mode)?)
            .map_err(py_err)?
            .w,
    )
}

/// Projection onto `{w : sum of the r largest |w_i| <= c}`.
#[pyfunction]
#[pyo3(signature = (z, r, c, mode = "binary"))]
fn project_kyfan_l1_ball(z: Vec<f64>, r: usize, c: f64, mode: &str) -> PyResult<Vec<f64>> {
    Ok(vec_prox::project_kyfan_l1_ball(&z, r, c, parse_mode(mode)?)
        .map_err(py_err)?
        .w)
}

/// Projection of `(Z, t)` onto the epigraph of the matrix norm.
#[pyfunction]
fn project_epigraph(
    z: Vec<Vec<f64>>,
    t: f64,
    flavor: &str,
    r: usize,
) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let (x, s) =
        mat_prox::project_epigraph(&to_matrix(&z)?, t, &parse_spec(flavor, r)?).map_err(py_err)?;
    Ok((from_matrix(&x), s))
}

/// Slow independent prox; returns `(x, converged)`.
#[pyfunction]
fn reference_prox_slow(z: Vec<f64>, norm: &PyScaledNorm) -> PyResult<(Vec<f64>, bool)> {
    let out = oracle::reference_prox_slow(&z, &norm.inner).map_err(py_err)?;
    Ok((out.x, out.converged))
}

/// Matrix completion by Douglas-Rachford. `mask` holds zero-based
/// `(row, col)` pairs. Returns `(X, report)`.
#[pyfunction]
#[pyo3(signature = (data, mask, norm, tol = 1e-9, max_iter = 100_000, step = 1.0, alpha = 1.0))]
#[allow(clippy::too_many_arguments)]
fn complete<'py>(
    py: Python<'py>,
    data: Vec<Vec<f64>>,
    mask: Vec<(usize, usize)>,
    norm: &PyScaledNorm,
    tol: f64,
    max_iter: usize,
    step: f64,
    alpha: f64,
) -> PyResult<(Vec<Vec<f64>>, Bound<'py, PyDict>)> {
    let cfg = SolverConfig {
        tol,
        max_iter,
        gamma: step,
        alpha,
        ..SolverConfig::default()
    };
    let spec = ProblemSpec::completion(to_matrix(&data)?, mask, norm.inner);
    let (x, report) = py
        .detach(|| solvers::solve_matrix_completion(&spec, &cfg))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("objective", report.objective)?;
    d.set_item("fixed_point_residual", report.fixed_point_residual)?;
    d.set_item("iterations", report.iterations)?;
    d.set_item("numerical_rank", report.numerical_rank)?;
    d.set_item("converged", report.converged)?;
    d.set_item("wall_time_ms", report.wall_time_ms)?;
    Ok((from_matrix(&x), d))
}

#[pymodule]
pub fn lrin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScaledNorm>()?;
    m.add_function(wrap_pyfunction!(norm_value, m)?)?;
    m.add_function(wrap_pyfunction!(dual_norm_value, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_norm_value, m)?)?;
    m.add_function(wrap_pyfunction!(singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(project_truncated_l2_ball, m)?)?;
    m.add_function(wrap_pyfunction!(project_kyfan_l1_ball, m)?)?;
    m.add_function(wrap_pyfunction!(project_epigraph, m)?)?;
    m.add_function(wrap_pyfunction!(reference_prox_slow, m)?)?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    Ok(())
}
