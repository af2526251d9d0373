//! Convergence studies and diagnostics built on [`crate::scheme::run`].
//!
//! Step and interval counts are tied together by the coupling rules
//! N = 2·M^{β/q} (temporal studies) and M = (N/2)^{q/β} (spatial studies),
//! with β = min{rγ, 2-γ} and q either 2 or μ.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifl::default_mu;
use crate::linalg::{jacobi_eigen, DenseMatrix};
use crate::problems::{ExampleKind, ManufacturedCase};
use crate::scheme::{
    level_system, run, KrylovMethod, ProblemSpec, RunOptions, RunOutput, SchemeKind, SolverChoice,
    SolverTag,
};
use crate::soe::{build_soe_with, log_grid, Validation, DEFAULT_NODE_CAP};
use crate::toeplitz_algebra::preconditioned_dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Time2,
    TimeMu,
    Space2,
    SpaceMu,
}

impl Coupling {
    pub fn is_temporal(self) -> bool {
        matches!(self, Coupling::Time2 | Coupling::TimeMu)
    }

    /// The q in the coupling exponent.
    pub fn q(self, mu: f64) -> f64 {
        match self {
            Coupling::Time2 | Coupling::Space2 => 2.0,
            Coupling::TimeMu | Coupling::SpaceMu => mu,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Coupling::Time2 => "time2",
            Coupling::TimeMu => "timemu",
            Coupling::Space2 => "space2",
            Coupling::SpaceMu => "spacemu",
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Coupling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time2" => Ok(Coupling::Time2),
            "timemu" => Ok(Coupling::TimeMu),
            "space2" => Ok(Coupling::Space2),
            "spacemu" => Ok(Coupling::SpaceMu),
            _ => Err(invalid(format!("unknown coupling '{s}'"))),
        }
    }
}

/// How a coupled count is rounded to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Plain floating-point floor; the reference error values assume it,
    /// including cases such as 2·1024^{0.6} = 127.99999999999999 → 127.
    #[default]
    Floor,
    /// Ceiling, snapping to an integer within 1e-9 relative first.
    Ceil,
}

impl Rounding {
    pub fn apply(self, x: f64) -> usize {
        let v = match self {
            Rounding::Floor => x.floor(),
            Rounding::Ceil => {
                let near = x.round();
                if (x - near).abs() <= 1e-9 * x.abs().max(1.0) {
                    near
                } else {
                    x.ceil()
                }
            }
        };
        (v as usize).max(1)
    }
}

impl FromStr for Rounding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "floor" => Ok(Rounding::Floor),
            "ceil" => Ok(Rounding::Ceil),
            _ => Err(invalid(format!("unknown rounding '{s}'"))),
        }
    }
}

/// β = min{rγ, 2-γ}.
pub fn temporal_order(r: f64, gamma: f64) -> f64 {
    (r * gamma).min(2.0 - gamma)
}

/// N(M) = 2·M^{β/q}.
pub fn intervals_for_steps(steps: usize, r: f64, gamma: f64, q: f64, rounding: Rounding) -> usize {
    rounding.apply(2.0 * (steps as f64).powf(temporal_order(r, gamma) / q))
}

/// M(N) = (N/2)^{q/β}.
pub fn steps_for_intervals(
    intervals: usize,
    r: f64,
    gamma: f64,
    q: f64,
    rounding: Rounding,
) -> usize {
    rounding.apply((intervals as f64 / 2.0).powf(q / temporal_order(r, gamma)))
}

/// Everything that defines a study except the M or N list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub case: ExampleKind,
    pub alpha: f64,
    pub gamma: f64,
    pub r: f64,
    /// `None` selects 1 + α/2.
    pub mu: Option<f64>,
    pub scheme: SchemeKind,
    pub solver: SolverChoice,
    pub krylov_method: KrylovMethod,
    /// `None` selects the case default.
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub max_iters: Option<usize>,
    pub coupling: Coupling,
    pub rounding: Rounding,
    /// Runs per row; the reported wall time is their mean.
    pub repetitions: usize,
}

impl StudyConfig {
    pub fn new(case: ExampleKind, alpha: f64, gamma: f64, r: f64) -> Self {
        Self {
            case,
            alpha,
            gamma,
            r,
            mu: None,
            scheme: SchemeKind::Fids,
            solver: SolverChoice::Auto,
            krylov_method: KrylovMethod::Auto,
            epsilon: None,
            tol: crate::krylov::DEFAULT_TOL,
            max_iters: None,
            coupling: Coupling::Time2,
            rounding: Rounding::Floor,
            repetitions: 1,
        }
    }

    pub fn mu_value(&self) -> f64 {
        self.mu.unwrap_or_else(|| default_mu(self.alpha))
    }

    pub fn epsilon_value(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| self.case.default_epsilon())
    }

    pub fn problem(&self) -> ProblemSpec {
        ManufacturedCase::new(self.case, self.alpha, self.gamma).spec()
    }

    pub fn q(&self) -> f64 {
        self.coupling.q(self.mu_value())
    }

    pub fn intervals_for(&self, steps: usize) -> usize {
        intervals_for_steps(steps, self.r, self.gamma, self.q(), self.rounding)
    }

    pub fn steps_for(&self, intervals: usize) -> usize {
        steps_for_intervals(intervals, self.r, self.gamma, self.q(), self.rounding)
    }

    pub fn run_options(&self, steps: usize, intervals: usize) -> RunOptions {
        let mut o = RunOptions::new(steps, self.r, intervals)
            .mu(self.mu_value())
            .scheme(self.scheme)
            .solver(self.solver)
            .epsilon(self.epsilon_value());
        o.krylov_method = self.krylov_method;
        o.tol = self.tol;
        o.max_iters = self.max_iters;
        o
    }

    fn check(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if !(self.r >= 1.0) {
            return Err(invalid(format!(
                "grading exponent must be >= 1, got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Runs once per repetition, keeping the first output and the mean wall time.
    pub fn timed_run(&self, steps: usize, intervals: usize) -> Result<(RunOutput, f64)> {
        self.run_with(self.problem(), steps, intervals)
    }

    fn run_with(
        &self,
        problem: ProblemSpec,
        steps: usize,
        intervals: usize,
    ) -> Result<(RunOutput, f64)> {
        self.check()?;
        let opts = self.run_options(steps, intervals);
        let first = run(&problem, &opts)?;
        let mut total = first.report.wall_time;
        for _ in 1..self.repetitions {
            total += run(&problem, &opts)?.report.wall_time;
        }
        Ok((first, total / self.repetitions as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub intervals: usize,
    pub err_inf: Option<f64>,
    pub rate_inf: Option<f64>,
    pub err_2: Option<f64>,
    pub rate_2: Option<f64>,
    pub avg_iterations: Option<f64>,
    pub wall_seconds: Option<f64>,
    /// Set when the run for this row failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub config: StudyConfig,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.failure.is_none())
    }

    pub fn err_inf(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.err_inf).collect()
    }

    pub fn rates_inf(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.rate_inf).collect()
    }
}

/// log₂(previous / current); undefined without two positive errors.
pub fn rate(previous: Option<f64>, current: Option<f64>) -> Option<f64> {
    match (previous, current) {
        (Some(p), Some(c)) if p > 0.0 && c > 0.0 => Some((p / c).log2()),
        _ => None,
    }
}

fn table_from_pairs(config: &StudyConfig, pairs: &[(usize, usize)]) -> ConvergenceTable {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(pairs.len());
    for &(steps, intervals) in pairs {
        let mut row = ConvergenceRow {
            steps,
            intervals,
            err_inf: None,
            rate_inf: None,
            err_2: None,
            rate_2: None,
            avg_iterations: None,
            wall_seconds: None,
            failure: None,
        };
        match config.timed_run(steps, intervals) {
            Ok((out, wall)) => {
                row.err_inf = out.report.err_inf;
                row.err_2 = out.report.err_2;
                row.avg_iterations = Some(out.report.avg_iterations);
                row.wall_seconds = Some(wall);
            }
            Err(e) => row.failure = Some(e.to_string()),
        }
        if let Some(prev) = rows.last() {
            row.rate_inf = rate(prev.err_inf, row.err_inf);
            row.rate_2 = rate(prev.err_2, row.err_2);
        }
        rows.push(row);
    }
    ConvergenceTable {
        config: config.clone(),
        rows,
    }
}

/// One row per M, with N from the temporal coupling.
pub fn convergence_time(config: &StudyConfig, steps: &[usize]) -> Result<ConvergenceTable> {
    config.check()?;
    if !config.coupling.is_temporal() {
        return Err(invalid(format!(
            "temporal study needs a time coupling, got {}",
            config.coupling
        )));
    }
    let pairs: Vec<_> = steps
        .iter()
        .map(|&m| (m, config.intervals_for(m)))
        .collect();
    Ok(table_from_pairs(config, &pairs))
}

/// One row per N, with M from the spatial coupling.
pub fn convergence_space(config: &StudyConfig, intervals: &[usize]) -> Result<ConvergenceTable> {
    config.check()?;
    if config.coupling.is_temporal() {
        return Err(invalid(format!(
            "spatial study needs a space coupling, got {}",
            config.coupling
        )));
    }
    let pairs: Vec<_> = intervals
        .iter()
        .map(|&n| (config.steps_for(n), n))
        .collect();
    Ok(table_from_pairs(config, &pairs))
}

/// Runs explicit (M, N) pairs without any coupling.
pub fn convergence_pairs(
    config: &StudyConfig,
    pairs: &[(usize, usize)],
) -> Result<ConvergenceTable> {
    config.check()?;
    Ok(table_from_pairs(config, pairs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub scheme: SchemeKind,
    pub requested: SolverChoice,
    pub solver: Option<SolverTag>,
    pub err_inf: Option<f64>,
    pub err_2: Option<f64>,
    pub avg_iterations: Option<f64>,
    pub wall_seconds: Option<f64>,
    /// Max-norm distance of the final state from the first successful cell of the same scheme.
    pub solution_gap: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub config: StudyConfig,
    pub steps: usize,
    pub intervals: usize,
    pub cells: Vec<CompareCell>,
}

impl CompareTable {
    pub fn all_succeeded(&self) -> bool {
        self.cells.iter().all(|c| c.failure.is_none())
    }

    pub fn cell(&self, scheme: SchemeKind, requested: SolverChoice) -> Option<&CompareCell> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme && c.requested == requested)
    }
}

/// Scheme × solver matrix at one (M, N).
pub fn solver_compare(
    config: &StudyConfig,
    steps: usize,
    intervals: usize,
    schemes: &[SchemeKind],
    solvers: &[SolverChoice],
) -> Result<CompareTable> {
    config.check()?;
    let problem = config.problem();
    let mut cells = Vec::new();
    for &scheme in schemes {
        let mut reference: Option<Vec<f64>> = None;
        for &solver in solvers {
            let cfg = StudyConfig {
                scheme,
                solver,
                ..config.clone()
            };
            let cell = match cfg.run_with(problem.clone(), steps, intervals) {
                Ok((out, wall)) => {
                    let last = out.final_state().to_vec();
                    let gap = reference.as_ref().map(|r| {
                        r.iter()
                            .zip(&last)
                            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                    });
                    if reference.is_none() {
                        reference = Some(last);
                    }
                    CompareCell {
                        scheme,
                        requested: solver,
                        solver: Some(out.report.solver),
                        err_inf: out.report.err_inf,
                        err_2: out.report.err_2,
                        avg_iterations: Some(out.report.avg_iterations),
                        wall_seconds: Some(wall),
                        solution_gap: gap,
                        failure: None,
                    }
                }
                Err(e) => CompareCell {
                    scheme,
                    requested: solver,
                    solver: None,
                    err_inf: None,
                    err_2: None,
                    avg_iterations: None,
                    wall_seconds: None,
                    solution_gap: None,
                    failure: Some(e.to_string()),
                },
            };
            cells.push(cell);
        }
    }
    Ok(CompareTable {
        config: config.clone(),
        steps,
        intervals,
        cells,
    })
}

/// Dense diagonalization is limited to this many intervals.
pub const SPECTRUM_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub steps: usize,
    pub intervals: usize,
    pub level: usize,
    /// True when κ does not depend on x: values are eigenvalues.
    /// Otherwise they are singular values.
    pub symmetric: bool,
    pub original: Vec<f64>,
    pub preconditioned: Vec<f64>,
    /// Preconditioned values outside (0.9, 1.1).
    pub outliers: usize,
    pub condition_original: f64,
    pub condition_preconditioned: f64,
    /// Union of the Gershgorin discs of the original matrix, as [lo, hi].
    pub gershgorin: (f64, f64),
}

fn gershgorin_hull(m: &DenseMatrix) -> (f64, f64) {
    (0..m.dim()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        let row = m.row(i);
        let radius: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.abs())
            .sum();
        (lo.min(row[i] - radius), hi.max(row[i] + radius))
    })
}

fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let gram = m.transpose().matmul(m);
    jacobi_eigen(&gram)
        .values
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect()
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    hi / lo
}

/// Spectrum of the level matrix and of its circulant-preconditioned congruence.
///
/// `constant_kappa` replaces the case coefficient by a constant, which makes the
/// level matrix symmetric. `level` defaults to the last one.
pub fn spectrum(
    config: &StudyConfig,
    steps: usize,
    intervals: usize,
    level: Option<usize>,
    constant_kappa: Option<f64>,
) -> Result<SpectrumReport> {
    config.check()?;
    if intervals > SPECTRUM_CAP {
        return Err(invalid(format!(
            "spectrum limited to N <= {SPECTRUM_CAP}, got {intervals}"
        )));
    }
    let mut problem = config.problem();
    if let Some(k) = constant_kappa {
        if !(k > 0.0) {
            return Err(invalid("constant diffusion coefficient must be positive"));
        }
        problem.kappa = std::sync::Arc::new(move |_, _| k);
        problem.kappa_x_independent = true;
    }
    let level = level.unwrap_or(steps);
    let system = level_system(&problem, &config.run_options(steps, intervals), level)?;
    let dense = system.dense()?;
    let pre = preconditioned_dense(&dense, &system.preconditioner()?)?;
    let symmetric = problem.kappa_x_independent;
    let (original, preconditioned) = if symmetric {
        (jacobi_eigen(&dense).values, jacobi_eigen(&pre).values)
    } else {
        (singular_values(&dense), singular_values(&pre))
    };
    let outliers = preconditioned
        .iter()
        .filter(|&&v| !(v > 0.9 && v < 1.1))
        .count();
    Ok(SpectrumReport {
        steps,
        intervals,
        level,
        symmetric,
        condition_original: spread(&original),
        condition_preconditioned: spread(&preconditioned),
        original,
        preconditioned,
        outliers,
        gershgorin: gershgorin_hull(&dense),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeProfileRow {
    pub t: f64,
    pub error: f64,
    /// False for t < δ, where no bound is claimed.
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeProfile {
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub final_time: f64,
    pub n_exp: usize,
    pub rows: Vec<SoeProfileRow>,
}

impl SoeProfile {
    /// Largest error among rows in [δ, T].
    pub fn max_in_range(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.in_range)
            .map(|r| r.error)
            .fold(0.0, f64::max)
    }
}

/// Error profile on a log grid of [δ/100, T]; rows below δ are flagged, not checked.
pub fn soe_check(
    gamma: f64,
    epsilon: f64,
    delta: f64,
    final_time: f64,
    points: usize,
    validation: Validation,
) -> Result<SoeProfile> {
    if points < 2 {
        return Err(invalid("need at least two profile points"));
    }
    let soe = build_soe_with(
        gamma,
        epsilon,
        delta,
        final_time,
        DEFAULT_NODE_CAP,
        validation,
    )?;
    let rows = log_grid(delta / 100.0, final_time, points)
        .into_iter()
        .map(|t| SoeProfileRow {
            t,
            error: soe.error_at(t),
            in_range: t >= delta,
        })
        .collect();
    Ok(SoeProfile {
        gamma,
        epsilon,
        delta,
        final_time,
        n_exp: soe.len(),
        rows,
    })
}
