//! Python bindings for the landscape-analysis toolkit: objectives, pendulum
//! tasks, slice planes and grids, Hessian reports and CMA-ES.
//!
//! Build with `cargo build -p optslice-py` (or `--release`); the resulting
//! `liboptslice_py.so` imports as the `optslice_py` module once renamed to
//! `optslice_py.so` on the Python path. See `python/smoke_test.py`.

// The pyo3 macro expansions trip this lint on their own generated code.
#![allow(clippy::useless_conversion)]
// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use optslice::analysis::{
    HessianReport, DEFAULT_RANK_TOL, DEFAULT_STEP_ANALYTIC, DEFAULT_STEP_PENDULUM,
};
use optslice::objectives::{make_objective, ObjectiveKind};
use optslice::optimize::CmaesConfig;
use optslice::pendulum::{
    trajectory_objective, ActionSpace, ObjectiveMode, PendulumState, PendulumTask,
    TerminationConfig, TerminationMode,
};
use optslice::slices::{LandscapeGrid, SlicePlane};
use optslice::Error;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::InvalidArgument(_) | Error::Config(_) => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// A scalar objective over R^d with optional known optimum.
#[pyclass(name = "Objective")]
#[derive(Clone)]
struct PyObjective {
    inner: optslice::ObjectiveHandle,
    /// True when Hessian steps should use the pendulum default.
    pendulum: bool,
}

#[pymethods]
impl PyObjective {
    /// quadratic_k(d, k, eps): ||x_:k||^2 + eps ||x_k:||^2.
    #[staticmethod]
    fn quadratic_k(d: usize, k: usize, eps: f64) -> PyResult<Self> {
        let spec = optslice::objectives::QuadraticKSpec::new(d, k, eps).map_err(to_py_err)?;
        Ok(PyObjective {
            inner: make_objective(ObjectiveKind::QuadraticK(spec)).map_err(to_py_err)?,
            pendulum: false,
        })
    }

    #[staticmethod]
    fn rastrigin(d: usize) -> PyResult<Self> {
        Ok(PyObjective {
            inner: make_objective(ObjectiveKind::Rastrigin { dimension: d }).map_err(to_py_err)?,
            pendulum: false,
        })
    }

    #[staticmethod]
    fn bimodal(d: usize) -> PyResult<Self> {
        Ok(PyObjective {
            inner: make_objective(ObjectiveKind::Bimodal { dimension: d }).map_err(to_py_err)?,
            pendulum: false,
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn known_optimum(&self) -> Option<Vec<f64>> {
        self.inner.known_optimum().map(<[f64]>::to_vec)
    }

    #[pyo3(signature = (x, seed = 0))]
    fn evaluate(&self, x: Vec<f64>, seed: u64) -> PyResult<f64> {
        if x.len() != self.inner.dimension() {
            return Err(PyValueError::new_err(format!(
                "point has dimension {}, objective expects {}",
                x.len(),
                self.inner.dimension()
            )));
        }
        Ok(self.inner.evaluate(&x, seed))
    }

    fn __repr__(&self) -> String {
        format!("Objective(dimension={})", self.inner.dimension())
    }
}

/// Inverted-pendulum balancing task.
#[pyclass(name = "PendulumTask")]
#[derive(Clone)]
struct PyPendulumTask {
    inner: PendulumTask,
}

fn parse_action_space(name: &str, spline_spacing: usize) -> PyResult<ActionSpace> {
    match name {
        "torque" => Ok(ActionSpace::torque()),
        "target_angle" => Ok(ActionSpace::target_angle()),
        "spline_target_angle" => Ok(ActionSpace::spline_target_angle(spline_spacing)),
        other => Err(PyValueError::new_err(format!(
            "unknown action space `{other}`"
        ))),
    }
}

#[pymethods]
impl PyPendulumTask {
    #[new]
    #[pyo3(signature = (
        horizon,
        weight = 1.0,
        action_space = "torque",
        objective = "cost",
        termination = "none",
        threshold = 2.0,
        alive_bonus = 1.0,
        penalty_per_step = 4.0,
        spline_spacing = 10,
        initial_alpha = 0.0,
        initial_omega = 0.0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        horizon: usize,
        weight: f64,
        action_space: &str,
        objective: &str,
        termination: &str,
        threshold: f64,
        alive_bonus: f64,
        penalty_per_step: f64,
        spline_spacing: usize,
        initial_alpha: f64,
        initial_omega: f64,
    ) -> PyResult<Self> {
        let mut task = PendulumTask::new(horizon);
        task.action_weight = weight;
        task.action_space = parse_action_space(action_space, spline_spacing)?;
        task.objective = match objective {
            "cost" => ObjectiveMode::Cost,
            "reward" => ObjectiveMode::Reward,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown objective kind `{other}`"
                )))
            }
        };
        let mode = match termination {
            "none" => TerminationMode::None,
            "plain" => TerminationMode::Plain,
            "alive_bonus" => TerminationMode::AliveBonus,
            "penalty" => TerminationMode::Penalty,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown termination mode `{other}`"
                )))
            }
        };
        task.termination = TerminationConfig {
            enabled: mode != TerminationMode::None,
            threshold,
            mode,
            alive_bonus,
            penalty_per_step,
        };
        task.initial_state = PendulumState::new(initial_alpha, initial_omega);
        task.validate().map_err(to_py_err)?;
        Ok(PyPendulumTask { inner: task })
    }

    #[getter]
    fn action_dimension(&self) -> usize {
        self.inner.action_dimension()
    }

    /// Simulates the action vector and returns
    /// `(total, per_step_values, terminated_at)`.
    fn rollout(&self, actions: Vec<f64>) -> PyResult<(f64, Vec<f64>, Option<usize>)> {
        let traj = optslice::pendulum::rollout(&self.inner, &actions).map_err(to_py_err)?;
        Ok((traj.total, traj.per_step_values, traj.terminated_at))
    }

    /// Wraps the task as a minimizable objective over the action vector.
    fn to_objective(&self) -> PyObjective {
        PyObjective {
            inner: trajectory_objective(&self.inner),
            pendulum: true,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "PendulumTask(horizon={}, action_dimension={})",
            self.inner.horizon,
            self.inner.action_dimension()
        )
    }
}

#[pyfunction]
fn sample_orthonormal_basis(d: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    optslice::slices::sample_orthonormal_basis(d, seed).map_err(to_py_err)
}

#[pyfunction]
fn sample_unnormalized_basis(d: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    optslice::slices::sample_unnormalized_basis(d, seed).map_err(to_py_err)
}

fn square_grid(values: Vec<Vec<f64>>) -> PyResult<LandscapeGrid> {
    let res = values.len();
    if res < 2 || values.iter().any(|row| row.len() != res) {
        return Err(PyValueError::new_err("grid must be square with size >= 2"));
    }
    let plane = SlicePlane::new(vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], 1.0, res)
        .map_err(to_py_err)?;
    Ok(LandscapeGrid {
        values: values.into_iter().flatten().collect(),
        plane,
        episodes_per_point: 1,
        seed: 0,
        normalized: false,
        blurred_sigma: None,
    })
}

fn grid_rows(grid: &LandscapeGrid) -> Vec<Vec<f64>> {
    let res = grid.resolution();
    (0..res)
        .map(|i| (0..res).map(|j| grid.value(i, j)).collect())
        .collect()
}

/// Evaluates `objective` over the slice plane grid; returns rows indexed by
/// the first plane coordinate.
#[pyfunction]
#[pyo3(signature = (objective, center, u, v, extent, resolution, episodes = 10, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn evaluate_grid(
    objective: &PyObjective,
    center: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    extent: f64,
    resolution: usize,
    episodes: usize,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let plane = SlicePlane::new(center, u, v, extent, resolution).map_err(to_py_err)?;
    let grid = optslice::slices::evaluate_grid(&objective.inner, &plane, episodes, seed)
        .map_err(to_py_err)?;
    Ok(grid_rows(&grid))
}

#[pyfunction]
fn gaussian_blur(values: Vec<Vec<f64>>, sigma: f64) -> PyResult<Vec<Vec<f64>>> {
    if !(sigma > 0.0) {
        return Err(PyValueError::new_err("sigma must be positive"));
    }
    let grid = square_grid(values)?;
    Ok(grid_rows(&optslice::slices::gaussian_blur(&grid, sigma)))
}

#[pyfunction]
fn normalize_grid(values: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let grid = square_grid(values)?;
    let normalized = optslice::slices::normalize_grid(&grid).map_err(to_py_err)?;
    Ok(grid_rows(&normalized))
}

/// Central-difference Hessian analysis of an objective at a point. Returns
/// a dict with `dimension`, `eigenvalues`, `kappa`, `indefinite` and
/// `separability_index`.
#[pyfunction]
#[pyo3(signature = (objective, x, step = None, rank_tol = DEFAULT_RANK_TOL))]
fn hessian_report(
    py: Python<'_>,
    objective: &PyObjective,
    x: Vec<f64>,
    step: Option<f64>,
    rank_tol: f64,
) -> PyResult<Py<PyDict>> {
    let h = step.unwrap_or(if objective.pendulum {
        DEFAULT_STEP_PENDULUM
    } else {
        DEFAULT_STEP_ANALYTIC
    });
    let report =
        HessianReport::from_objective(&objective.inner, &x, h, rank_tol).map_err(to_py_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("dimension", report.matrix.dim())?;
    dict.set_item("eigenvalues", report.eigenvalues.clone())?;
    dict.set_item("kappa", report.kappa)?;
    dict.set_item("indefinite", report.indefinite)?;
    dict.set_item("separability_index", report.separability_index)?;
    Ok(dict.into())
}

/// Condition number of the objective restricted to the plane spanned by
/// `u` and `v` through `center` (may be `inf`).
#[pyfunction]
#[pyo3(signature = (objective, center, u, v, step = DEFAULT_STEP_ANALYTIC))]
fn slice_condition_number(
    objective: &PyObjective,
    center: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    step: f64,
) -> PyResult<f64> {
    optslice::analysis::slice_condition_number(&objective.inner, &center, &u, &v, step)
        .map(|c| c.kappa)
        .map_err(to_py_err)
}

/// CMA-ES minimization. Returns a dict with `best_x`, `best_f`, `evals` and
/// a per-generation `history` of `(evals, best_f, dist)` tuples.
#[pyfunction]
#[pyo3(signature = (objective, x0, population = 100, sigma0 = 0.5, max_evals = 10_000, seed = 0))]
fn cmaes_minimize(
    py: Python<'_>,
    objective: &PyObjective,
    x0: Vec<f64>,
    population: usize,
    sigma0: f64,
    max_evals: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let cfg = CmaesConfig {
        population,
        sigma0,
        max_evals,
        seed,
    };
    let run = optslice::optimize::cmaes_minimize(&objective.inner, &x0, &cfg).map_err(to_py_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("best_x", run.best_x.clone())?;
    dict.set_item("best_f", run.best_f)?;
    dict.set_item("evals", run.history.last().map_or(0, |e| e.evals))?;
    let history: Vec<(usize, f64, Option<f64>)> = run
        .history
        .iter()
        .map(|e| (e.evals, e.best_f, e.dist))
        .collect();
    dict.set_item("history", history)?;
    Ok(dict.into())
}

#[pymodule]
fn optslice_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PyPendulumTask>()?;
    m.add_function(wrap_pyfunction!(sample_orthonormal_basis, m)?)?;
    m.add_function(wrap_pyfunction!(sample_unnormalized_basis, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_blur, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_grid, m)?)?;
    m.add_function(wrap_pyfunction!(hessian_report, m)?)?;
    m.add_function(wrap_pyfunction!(slice_condition_number, m)?)?;
    m.add_function(wrap_pyfunction!(cmaes_minimize, m)?)?;
    Ok(())
}
