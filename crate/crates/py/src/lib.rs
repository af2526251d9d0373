//! Python bindings for the `fracdiff` solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fracdiff::problems::ExampleKind;
use fracdiff::scheme::{SchemeKind, SolverChoice};
use fracdiff::soe::{build_soe_with, SoeApproximation, Validation, DEFAULT_NODE_CAP};
use fracdiff::study::{self, ConvergenceTable, Coupling, Rounding, StudyConfig};
use fracdiff::toeplitz_algebra::{CirculantPreconditioner, ToeplitzOperator};
use fracdiff::{ifl, time_mesh, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn scheme(name: &str) -> PyResult<SchemeKind> {
    match name.to_ascii_lowercase().as_str() {
        "dids" => Ok(SchemeKind::Dids),
        "fids" => Ok(SchemeKind::Fids),
        _ => Err(PyValueError::new_err(format!("unknown scheme '{name}'"))),
    }
}

fn solver(name: &str) -> PyResult<SolverChoice> {
    match name.to_ascii_lowercase().as_str() {
        "auto" => Ok(SolverChoice::Auto),
        "direct" => Ok(SolverChoice::Direct),
        "krylov" => Ok(SolverChoice::Krylov),
        "pkrylov" => Ok(SolverChoice::Pkrylov),
        _ => Err(PyValueError::new_err(format!("unknown solver '{name}'"))),
    }
}

/// Sum-of-exponentials approximation of t^{-γ} on [δ, T].
#[pyclass(name = "Soe", frozen)]
struct PySoe {
    inner: SoeApproximation,
}

#[pymethods]
impl PySoe {
    #[new]
    #[pyo3(signature = (gamma, epsilon, delta, final_time=1.0, rounding_aware=false))]
    fn new(
        gamma: f64,
        epsilon: f64,
        delta: f64,
        final_time: f64,
        rounding_aware: bool,
    ) -> PyResult<Self> {
        let validation = if rounding_aware {
            Validation::RoundingAware
        } else {
            Validation::Strict
        };
        build_soe_with(
            gamma,
            epsilon,
            delta,
            final_time,
            DEFAULT_NODE_CAP,
            validation,
        )
        .map(|inner| Self { inner })
        .map_err(to_py)
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn measured_error(&self) -> f64 {
        self.inner.measured_error()
    }

    fn evaluate(&self, t: f64) -> f64 {
        self.inner.evaluate(t)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Soe(gamma={}, epsilon={:e}, n_exp={})",
            self.inner.gamma(),
            self.inner.epsilon(),
            self.inner.len()
        )
    }
}

/// Mesh points t_0..t_M of the graded mesh t_k = T (k/M)^r.
#[pyfunction]
#[pyo3(signature = (steps, grading, final_time=1.0))]
fn mesh_points(steps: usize, grading: f64, final_time: f64) -> PyResult<Vec<f64>> {
    let mesh = time_mesh::build_mesh(steps, grading, final_time).map_err(to_py)?;
    Ok((0..=steps).map(|k| mesh.t(k)).collect())
}

/// L1 weights a^{(m)}_1..a^{(m)}_m at level m.
#[pyfunction]
#[pyo3(signature = (steps, grading, gamma, level, final_time=1.0))]
fn l1_weights(
    steps: usize,
    grading: f64,
    gamma: f64,
    level: usize,
    final_time: f64,
) -> PyResult<Vec<f64>> {
    let mesh = time_mesh::build_mesh(steps, grading, final_time).map_err(to_py)?;
    let w = time_mesh::l1_weights(&mesh, gamma, level).map_err(to_py)?;
    Ok((1..=level).map(|k| w.get(k)).collect())
}

/// First column of the fractional Laplacian matrix on N intervals of (-l, l).
#[pyfunction]
#[pyo3(signature = (alpha, intervals, mu=None, half_width=1.0))]
fn ifl_first_column(
    alpha: f64,
    intervals: usize,
    mu: Option<f64>,
    half_width: f64,
) -> PyResult<Vec<f64>> {
    let mu = mu.unwrap_or_else(|| ifl::default_mu(alpha));
    let d = ifl::build_ifl(alpha, mu, half_width, intervals).map_err(to_py)?;
    Ok(d.first_col().to_vec())
}

/// Symmetric Toeplitz matrix (given by its first column) times a vector.
#[pyfunction]
fn toeplitz_matvec(first_col: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
    ToeplitzOperator::new(&first_col)
        .and_then(|op| op.matvec(&v))
        .map_err(to_py)
}

/// Solves (shift·I + κ̄·S) x = v with S the Strang circulant of `first_col`.
#[pyfunction]
fn circulant_solve(
    first_col: Vec<f64>,
    shift: f64,
    kappa_bar: f64,
    v: Vec<f64>,
) -> PyResult<Vec<f64>> {
    CirculantPreconditioner::new(&first_col, shift, kappa_bar)
        .and_then(|p| p.solve(&v))
        .map_err(to_py)
}

#[allow(clippy::too_many_arguments)]
fn config(
    case: &str,
    alpha: f64,
    gamma: f64,
    r: f64,
    mu: Option<f64>,
    scheme_name: &str,
    solver_name: &str,
    epsilon: Option<f64>,
    tol: f64,
) -> PyResult<StudyConfig> {
    let mut c = StudyConfig::new(
        ExampleKind::from_name(case).map_err(to_py)?,
        alpha,
        gamma,
        r,
    );
    c.mu = mu;
    c.scheme = scheme(scheme_name)?;
    c.solver = solver(solver_name)?;
    c.epsilon = epsilon;
    c.tol = tol;
    Ok(c)
}

/// Runs one manufactured case and returns a dict with the report and final state.
#[pyfunction]
#[pyo3(signature = (case, alpha, gamma, r, steps, intervals, mu=None, scheme="fids", solver="auto", epsilon=None, tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn run_case<'py>(
    py: Python<'py>,
    case: &str,
    alpha: f64,
    gamma: f64,
    r: f64,
    steps: usize,
    intervals: usize,
    mu: Option<f64>,
    scheme: &str,
    solver: &str,
    epsilon: Option<f64>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(case, alpha, gamma, r, mu, scheme, solver, epsilon, tol)?;
    let (out, _) = py
        .detach(|| cfg.timed_run(steps, intervals))
        .map_err(to_py)?;
    let rep = &out.report;
    let d = PyDict::new(py);
    d.set_item("scheme", rep.scheme.to_string())?;
    d.set_item("solver", rep.solver.to_string())?;
    d.set_item("steps", rep.steps)?;
    d.set_item("intervals", rep.intervals)?;
    d.set_item("err_inf", rep.err_inf)?;
    d.set_item("err_2", rep.err_2)?;
    d.set_item("avg_iterations", rep.avg_iterations)?;
    d.set_item("max_iterations", rep.max_iterations)?;
    d.set_item("n_exp", rep.n_exp)?;
    d.set_item("history_memory", rep.history_memory)?;
    d.set_item("stable", rep.stability.all_hold())?;
    d.set_item("wall_time", rep.wall_time)?;
    d.set_item("nodes", out.nodes.clone())?;
    d.set_item("final_state", out.final_state().to_vec())?;
    Ok(d)
}

fn rows<'py>(py: Python<'py>, table: &ConvergenceTable) -> PyResult<Vec<Bound<'py, PyDict>>> {
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("M", r.steps)?;
            d.set_item("N", r.intervals)?;
            d.set_item("err_inf", r.err_inf)?;
            d.set_item("rate_inf", r.rate_inf)?;
            d.set_item("err_2", r.err_2)?;
            d.set_item("rate_2", r.rate_2)?;
            d.set_item("avg_iterations", r.avg_iterations)?;
            d.set_item("wall_seconds", r.wall_seconds)?;
            d.set_item("failure", r.failure.clone())?;
            Ok(d)
        })
        .collect()
}

/// Convergence table: `counts` is a list of M for time couplings, of N for space couplings.
#[pyfunction]
#[pyo3(signature = (case, alpha, gamma, r, counts, coupling="time2", rounding="floor", mu=None, scheme="fids", solver="auto", epsilon=None, tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn convergence<'py>(
    py: Python<'py>,
    case: &str,
    alpha: f64,
    gamma: f64,
    r: f64,
    counts: Vec<usize>,
    coupling: &str,
    rounding: &str,
    mu: Option<f64>,
    scheme: &str,
    solver: &str,
    epsilon: Option<f64>,
    tol: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = config(case, alpha, gamma, r, mu, scheme, solver, epsilon, tol)?;
    cfg.coupling = parse::<Coupling>(coupling)?;
    cfg.rounding = parse::<Rounding>(rounding)?;
    let table = py
        .detach(|| {
            if cfg.coupling.is_temporal() {
                study::convergence_time(&cfg, &counts)
            } else {
                study::convergence_space(&cfg, &counts)
            }
        })
        .map_err(to_py)?;
    rows(py, &table)
}

#[pymodule]
fn fracdiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySoe>()?;
    m.add_function(wrap_pyfunction!(mesh_points, m)?)?;
    m.add_function(wrap_pyfunction!(l1_weights, m)?)?;
    m.add_function(wrap_pyfunction!(ifl_first_column, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_matvec, m)?)?;
    m.add_function(wrap_pyfunction!(circulant_solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_case, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
