//! Time stepping for ∂^γ_t u = -κ(x,t)(-Δ)^{α/2} u + f on (-l, l) × (0, T].
//!
//! Each level solves (shift·I + K^{(m)} A) u^m = rhs with shift = a_m/Γ(1-γ)
//! and K^{(m)} = diag κ(x_i, t_m). The direct scheme (DIDS) rebuilds the full
//! L1 history sum every level; the fast scheme (FIDS) carries it in SOE
//! accumulators.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifl::{build_ifl, default_mu, IflDiscretization};
use crate::krylov::{
    default_max_iters, solve_bicgstab, solve_cg, solve_dense, CirculantApply, KrylovReport,
    LevelOperator, Preconditioner, DEFAULT_TOL,
};
use crate::linalg::DenseMatrix;
use crate::soe::{
    build_soe_with, fast_caputo_rhs, FastHistory, SoeApproximation, Validation, DEFAULT_NODE_CAP,
};
use crate::special::{gamma, CompensatedSum};
use crate::time_mesh::{build_mesh, l1_first_weight, l1_last_weight, l1_weights, GradedMesh};
use crate::toeplitz_algebra::{CirculantPreconditioner, ToeplitzOperator};

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub half_width: f64,
    pub final_time: f64,
    pub kappa: SpaceTimeFn,
    pub source: SpaceTimeFn,
    pub initial: SpaceFn,
    pub exact: Option<SpaceTimeFn>,
    /// κ depends on t only, so every level is symmetric positive definite.
    pub kappa_x_independent: bool,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("gamma", &self.gamma)
            .field("alpha", &self.alpha)
            .field("half_width", &self.half_width)
            .field("final_time", &self.final_time)
            .field("has_exact", &self.exact.is_some())
            .field("kappa_x_independent", &self.kappa_x_independent)
            .finish()
    }
}

impl ProblemSpec {
    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!(
                "Caputo order must lie in (0,1), got {}",
                self.gamma
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!(
                "fractional order must lie in (0,2), got {}",
                self.alpha
            )));
        }
        if !(self.half_width > 0.0) || !(self.final_time > 0.0) {
            return Err(invalid("domain and final time must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Dids,
    Fids,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Dids => "DIDS",
            SchemeKind::Fids => "FIDS",
        })
    }
}

/// What the caller asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Auto,
    Direct,
    Krylov,
    Pkrylov,
}

/// What actually runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverTag {
    Direct,
    Krylov,
    PrecondKrylov,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverTag::Direct => "direct",
            SolverTag::Krylov => "krylov",
            SolverTag::PrecondKrylov => "precond-krylov",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrylovMethod {
    /// CG when κ is x-independent, BiCGSTAB otherwise.
    Auto,
    Cg,
    Bicgstab,
}

pub const DEFAULT_DIRECT_THRESHOLD: usize = 128;

pub fn select_solver(intervals: usize, choice: SolverChoice, direct_threshold: usize) -> SolverTag {
    match choice {
        SolverChoice::Direct => SolverTag::Direct,
        SolverChoice::Krylov => SolverTag::Krylov,
        SolverChoice::Pkrylov => SolverTag::PrecondKrylov,
        SolverChoice::Auto if intervals.saturating_sub(1) <= direct_threshold => SolverTag::Direct,
        SolverChoice::Auto => SolverTag::PrecondKrylov,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub steps: usize,
    pub grading: f64,
    pub intervals: usize,
    /// Splitting parameter; `None` means 1 + α/2.
    pub mu: Option<f64>,
    pub scheme: SchemeKind,
    pub solver: SolverChoice,
    pub krylov_method: KrylovMethod,
    pub direct_threshold: usize,
    /// SOE tolerance (FIDS only).
    pub epsilon: f64,
    /// SOE cut-off; `None` means τ_1.
    pub delta: Option<f64>,
    pub tol: f64,
    /// `None` means 10·(N-1).
    pub max_iters: Option<usize>,
    /// Keep every u^m; otherwise only the final level (FIDS) is returned.
    pub keep_history: bool,
    /// Record D(shift·I + K·A) - shift per level from a dense assembly.
    pub check_dominance: bool,
}

impl RunOptions {
    pub fn new(steps: usize, grading: f64, intervals: usize) -> Self {
        Self {
            steps,
            grading,
            intervals,
            mu: None,
            scheme: SchemeKind::Dids,
            solver: SolverChoice::Auto,
            krylov_method: KrylovMethod::Auto,
            direct_threshold: DEFAULT_DIRECT_THRESHOLD,
            epsilon: 1e-10,
            delta: None,
            tol: DEFAULT_TOL,
            max_iters: None,
            keep_history: true,
            check_dominance: false,
        }
    }

    pub fn scheme(mut self, scheme: SchemeKind) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }
}

/// Per-level check of ‖u^k‖∞ ≤ ‖u^0‖∞ + Γ(1-γ) max_{s≤k} ‖f^s‖∞ / c_1^{(s)},
/// with c_1 = a_1 (DIDS) or the SOE coefficient b_1 (FIDS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub holds: Vec<bool>,
    /// min over levels of bound - ‖u^k‖∞
    pub min_slack: f64,
}

impl StabilityCheck {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: SchemeKind,
    pub solver: SolverTag,
    pub steps: usize,
    pub intervals: usize,
    pub err_inf: Option<f64>,
    pub err_2: Option<f64>,
    pub avg_iterations: f64,
    pub max_iterations: usize,
    pub wall_time: f64,
    /// Number of exponentials (FIDS).
    pub n_exp: Option<usize>,
    /// Multiply-adds spent on the history term, per level.
    pub history_ops: Vec<u64>,
    /// Floating-point values held for the history term at the end of the run.
    pub history_memory: usize,
    pub stability: StabilityCheck,
    /// min over levels of D(shift·I + K·A) - shift, when requested.
    pub dominance_margin: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub nodes: Vec<f64>,
    pub mesh: GradedMesh,
    /// u^0..u^M when kept, else only u^M.
    pub solution: Vec<Vec<f64>>,
    pub report: SolveReport,
}

impl RunOutput {
    pub fn final_state(&self) -> &[f64] {
        self.solution.last().expect("at least one level")
    }
}

enum History {
    Direct,
    Fast(FastHistory),
}

struct LevelSolver<'a> {
    tag: SolverTag,
    method: KrylovMethod,
    ifl: &'a IflDiscretization,
    toeplitz: &'a ToeplitzOperator,
    tol: f64,
    max_iters: usize,
}

impl LevelSolver<'_> {
    fn solve(
        &self,
        shift: f64,
        kappa: &[f64],
        rhs: &[f64],
        level: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let mut op = LevelOperator::new(shift, kappa, self.toeplitz)?;
        if self.tag == SolverTag::Direct {
            return Ok((solve_dense(&op.to_dense(), rhs)?, 0));
        }
        let pre;
        let mut apply;
        let precond: Option<&mut dyn Preconditioner> = if self.tag == SolverTag::PrecondKrylov {
            let kappa_bar =
                kappa.iter().copied().collect::<CompensatedSum>().value() / kappa.len() as f64;
            pre = CirculantPreconditioner::new(self.ifl.first_col(), shift, kappa_bar)?;
            apply = CirculantApply::new(&pre);
            Some(&mut apply)
        } else {
            None
        };
        let (x, report): (Vec<f64>, KrylovReport) = match self.method {
            KrylovMethod::Cg => solve_cg(&mut op, precond, rhs, self.tol, self.max_iters)?,
            _ => solve_bicgstab(&mut op, precond, rhs, self.tol, self.max_iters)?,
        };
        if !report.converged {
            let reason = match report.breakdown {
                Some(b) => format!("{b} after {} iterations", report.iterations),
                None => format!(
                    "no convergence in {} iterations (residual {:.3e})",
                    report.iterations, report.final_relative_residual
                ),
            };
            return Err(Error::Solver { level, reason });
        }
        Ok((x, report.iterations))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn run(p: &ProblemSpec, opts: &RunOptions) -> Result<RunOutput> {
    p.validate()?;
    if opts.steps == 0 {
        return Err(invalid("need at least one time step"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("solver tolerance must be positive"));
    }
    let start = Instant::now();
    let mesh = build_mesh(opts.steps, opts.grading, p.final_time)?;
    let ifl = build_ifl(
        p.alpha,
        opts.mu.unwrap_or_else(|| default_mu(p.alpha)),
        p.half_width,
        opts.intervals,
    )?;
    let toeplitz = ToeplitzOperator::new(ifl.first_col())?;
    let nodes = ifl.interior_nodes();
    let n = nodes.len();
    let h = ifl.h();
    let g1 = gamma(1.0 - p.gamma);

    let tag = select_solver(opts.intervals, opts.solver, opts.direct_threshold);
    let method = match opts.krylov_method {
        KrylovMethod::Auto if p.kappa_x_independent => KrylovMethod::Cg,
        KrylovMethod::Auto => KrylovMethod::Bicgstab,
        m => m,
    };
    let solver = LevelSolver {
        tag,
        method,
        ifl: &ifl,
        toeplitz: &toeplitz,
        tol: opts.tol,
        max_iters: opts.max_iters.unwrap_or_else(|| default_max_iters(n)),
    };

    let mut history = match opts.scheme {
        SchemeKind::Dids => History::Direct,
        SchemeKind::Fids => {
            let soe = if opts.steps > 1 {
                let delta = opts.delta.unwrap_or_else(|| mesh.tau(1));
                build_soe_with(
                    p.gamma,
                    opts.epsilon,
                    delta,
                    p.final_time,
                    DEFAULT_NODE_CAP,
                    Validation::RoundingAware,
                )?
            } else {
                SoeApproximation::from_parts(p.gamma, Vec::new(), Vec::new())?
            };
            History::Fast(FastHistory::new(soe, n))
        }
    };
    let keep_all = opts.keep_history || opts.scheme == SchemeKind::Dids;

    let u0: Vec<f64> = nodes.iter().map(|&x| (p.initial)(x)).collect();
    let u0_norm = max_abs(&u0);
    let mut solution = vec![u0];
    let mut prev = solution[0].clone();

    let mut err_inf = 0.0f64;
    let mut err_2 = 0.0f64;
    let mut measure = |u: &[f64], t: f64| {
        if let Some(exact) = &p.exact {
            let mut sq = CompensatedSum::new();
            for (ui, &x) in u.iter().zip(&nodes) {
                let e = ui - exact(x, t);
                err_inf = err_inf.max(e.abs());
                sq.add(e * e);
            }
            err_2 = err_2.max((h * sq.value()).sqrt());
        }
    };
    measure(&prev, 0.0);

    let mut iterations = Vec::with_capacity(opts.steps);
    let mut history_ops = Vec::with_capacity(opts.steps);
    let mut holds = Vec::with_capacity(opts.steps);
    let mut min_slack = f64::INFINITY;
    let mut forcing_bound = 0.0f64;
    let mut dominance_margin = f64::INFINITY;
    let mut kappa = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for m in 1..=opts.steps {
        let t = mesh.t(m);
        let tau = mesh.tau(m);
        let a_mm = l1_last_weight(&mesh, p.gamma, m)?;
        let shift = a_mm / g1;
        for (k, &x) in kappa.iter_mut().zip(&nodes) {
            *k = (p.kappa)(x, t);
            if !(*k > 0.0) {
                return Err(invalid(format!(
                    "diffusion coefficient not positive at x={x}, t={t}"
                )));
            }
        }

        let (known, ops, c1) = match &history {
            History::Direct => {
                let w = l1_weights(&mesh, p.gamma, m)?;
                let sum = w.history_sum(&solution[..m])?;
                (
                    sum.into_iter().map(|v| v / g1).collect::<Vec<_>>(),
                    (m * n) as u64,
                    w.get(1),
                )
            }
            History::Fast(fast) => {
                let known = fast_caputo_rhs(fast, a_mm, &prev, p.gamma, tau)?;
                let c1 = if m == 1 {
                    l1_first_weight(&mesh, p.gamma, 1)?
                } else {
                    soe_first_coefficient(fast.soe(), &mesh, m)
                };
                (known, (fast.soe().len() * n) as u64, c1)
            }
        };

        let mut f_norm = 0.0f64;
        for ((r, kn), &x) in rhs.iter_mut().zip(&known).zip(&nodes) {
            let f = (p.source)(x, t);
            f_norm = f_norm.max(f.abs());
            *r = kn + f;
        }

        if opts.check_dominance {
            let dense = LevelOperator::new(shift, &kappa, &toeplitz)?.to_dense();
            dominance_margin = dominance_margin.min(dense.dominance_gap() - shift);
        }

        let (u, its) = solver.solve(shift, &kappa, &rhs, m)?;
        iterations.push(its);

        let mut push_ops = 0;
        if let History::Fast(fast) = &mut history {
            let du: Vec<f64> = u.iter().zip(&prev).map(|(a, b)| a - b).collect();
            push_ops = fast.push(&du, tau)?;
        }
        history_ops.push(ops + push_ops);

        forcing_bound = forcing_bound.max(f_norm / c1);
        let bound = u0_norm + g1 * forcing_bound;
        let slack = bound - max_abs(&u);
        holds.push(slack >= -1e-12 * bound.max(1.0));
        min_slack = min_slack.min(slack);

        measure(&u, t);
        if keep_all {
            solution.push(u.clone());
        }
        prev = u;
    }
    if !keep_all {
        solution = vec![prev];
    }

    let history_memory = match &history {
        History::Direct => opts.steps * n,
        History::Fast(fast) => fast.stored_values(),
    };
    let n_exp = match &history {
        History::Direct => None,
        History::Fast(fast) => Some(fast.soe().len()),
    };
    let report = SolveReport {
        scheme: opts.scheme,
        solver: tag,
        steps: opts.steps,
        intervals: opts.intervals,
        err_inf: p.exact.as_ref().map(|_| err_inf),
        err_2: p.exact.as_ref().map(|_| err_2),
        avg_iterations: iterations.iter().sum::<usize>() as f64 / iterations.len() as f64,
        max_iterations: iterations.iter().copied().max().unwrap_or(0),
        wall_time: start.elapsed().as_secs_f64(),
        n_exp,
        history_ops,
        history_memory,
        stability: StabilityCheck { holds, min_slack },
        dominance_margin: opts.check_dominance.then_some(dominance_margin),
    };
    Ok(RunOutput {
        nodes,
        mesh,
        solution,
        report,
    })
}

/// The pieces of the level-m matrix shift·I + diag(κ(·, t_m))·A.
#[derive(Debug, Clone)]
pub struct LevelSystem {
    pub level: usize,
    pub time: f64,
    pub shift: f64,
    pub kappa: Vec<f64>,
    pub ifl: IflDiscretization,
}

impl LevelSystem {
    pub fn kappa_bar(&self) -> f64 {
        self.kappa
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
            / self.kappa.len() as f64
    }

    pub fn dense(&self) -> Result<DenseMatrix> {
        let toeplitz = ToeplitzOperator::new(self.ifl.first_col())?;
        Ok(LevelOperator::new(self.shift, &self.kappa, &toeplitz)?.to_dense())
    }

    pub fn preconditioner(&self) -> Result<CirculantPreconditioner> {
        CirculantPreconditioner::new(self.ifl.first_col(), self.shift, self.kappa_bar())
    }
}

/// Assembles the coefficients of level `level` (1-based) without stepping.
pub fn level_system(p: &ProblemSpec, opts: &RunOptions, level: usize) -> Result<LevelSystem> {
    p.validate()?;
    if level == 0 || level > opts.steps {
        return Err(invalid(format!(
            "level must lie in 1..={}, got {level}",
            opts.steps
        )));
    }
    let mesh = build_mesh(opts.steps, opts.grading, p.final_time)?;
    let ifl = build_ifl(
        p.alpha,
        opts.mu.unwrap_or_else(|| default_mu(p.alpha)),
        p.half_width,
        opts.intervals,
    )?;
    let t = mesh.t(level);
    let shift = l1_last_weight(&mesh, p.gamma, level)? / gamma(1.0 - p.gamma);
    let kappa = ifl
        .interior_nodes()
        .iter()
        .map(|&x| (p.kappa)(x, t))
        .collect();
    Ok(LevelSystem {
        level,
        time: t,
        shift,
        kappa,
        ifl,
    })
}

/// b^{(m,γ)}_1 for m ≥ 2, in O(N_exp).
fn soe_first_coefficient(soe: &SoeApproximation, mesh: &GradedMesh, level: usize) -> f64 {
    let tau = mesh.tau(1);
    let near = mesh.t(level) - mesh.t(1);
    soe.nodes()
        .iter()
        .zip(soe.weights())
        .map(|(s, w)| -w * (-s * near).exp() * (-s * tau).exp_m1() / (s * tau))
        .collect::<CompensatedSum>()
        .value()
}

pub fn run_dids(p: &ProblemSpec, opts: &RunOptions) -> Result<RunOutput> {
    run(
        p,
        &RunOptions {
            scheme: SchemeKind::Dids,
            ..opts.clone()
        },
    )
}

pub fn run_fids(p: &ProblemSpec, opts: &RunOptions) -> Result<RunOutput> {
    run(
        p,
        &RunOptions {
            scheme: SchemeKind::Fids,
            ..opts.clone()
        },
    )
}

/// Runs the scheme and returns the per-level stability verification.
pub fn stability_probe(p: &ProblemSpec, opts: &RunOptions) -> Result<StabilityCheck> {
    let lean = RunOptions {
        keep_history: false,
        ..opts.clone()
    };
    Ok(run(p, &lean)?.report.stability)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soe::{build_soe, fast_coefficients};

    fn zero_problem() -> ProblemSpec {
        ProblemSpec {
            gamma: 0.5,
            alpha: 1.5,
            half_width: 1.0,
            final_time: 1.0,
            kappa: Arc::new(|x, t| 1.0 + x * x + t),
            source: Arc::new(|_, _| 0.0),
            initial: Arc::new(|_| 0.0),
            exact: Some(Arc::new(|_, _| 0.0)),
            kappa_x_independent: false,
        }
    }

    #[test]
    fn solver_selection() {
        assert_eq!(
            select_solver(64, SolverChoice::Auto, 128),
            SolverTag::Direct
        );
        assert_eq!(
            select_solver(129, SolverChoice::Auto, 128),
            SolverTag::Direct
        );
        assert_eq!(
            select_solver(512, SolverChoice::Auto, 128),
            SolverTag::PrecondKrylov
        );
        assert_eq!(
            select_solver(512, SolverChoice::Krylov, 128),
            SolverTag::Krylov
        );
        assert_eq!(
            select_solver(8, SolverChoice::Pkrylov, 128),
            SolverTag::PrecondKrylov
        );
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = zero_problem();
        for scheme in [SchemeKind::Dids, SchemeKind::Fids] {
            for solver in [
                SolverChoice::Direct,
                SolverChoice::Krylov,
                SolverChoice::Pkrylov,
            ] {
                let out = run(
                    &p,
                    &RunOptions::new(8, 2.0, 16).scheme(scheme).solver(solver),
                )
                .unwrap();
                assert!(out.solution.iter().flatten().all(|&u| u == 0.0));
                assert_eq!(out.report.err_inf, Some(0.0));
            }
        }
    }

    #[test]
    fn random_initial_data_decays_without_forcing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let values: Vec<f64> = (0..31).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = zero_problem();
        p.exact = None;
        p.initial = Arc::new(move |x| values[((x + 1.0) * 16.0).round() as usize - 1]);
        for scheme in [SchemeKind::Dids, SchemeKind::Fids] {
            let out = run(&p, &RunOptions::new(16, 2.0, 32).scheme(scheme)).unwrap();
            let u0 = max_abs(&out.solution[0]);
            assert!(out
                .solution
                .iter()
                .all(|u| max_abs(u) <= u0 * (1.0 + 1e-12)));
            assert!(out.report.stability.all_hold());
            assert_eq!(out.report.err_inf, None);
        }
    }

    #[test]
    fn lean_fids_keeps_final_level_only() {
        let mut p = zero_problem();
        p.source = Arc::new(|x, _| 1.0 - x * x);
        let mut opts = RunOptions::new(16, 2.0, 16).scheme(SchemeKind::Fids);
        let full = run(&p, &opts).unwrap();
        opts.keep_history = false;
        let lean = run(&p, &opts).unwrap();
        assert_eq!(lean.solution.len(), 1);
        assert_eq!(lean.final_state(), full.final_state());
        assert_eq!(full.solution.len(), 17);
    }

    #[test]
    fn dominance_margin_is_nonnegative() {
        let mut p = zero_problem();
        p.source = Arc::new(|x, t| (1.0 - x * x) * (1.0 + t));
        let mut opts = RunOptions::new(8, 2.0, 32);
        opts.check_dominance = true;
        let out = run(&p, &opts).unwrap();
        assert!(out.report.dominance_margin.unwrap() >= -1e-12);
    }

    #[test]
    fn non_positive_kappa_rejected() {
        let mut p = zero_problem();
        p.kappa = Arc::new(|x, _| x);
        assert!(matches!(
            run(&p, &RunOptions::new(4, 1.0, 8)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn first_coefficient_matches_explicit_vector() {
        let mesh = build_mesh(16, 2.0, 1.0).unwrap();
        let soe = build_soe(0.5, 1e-10, mesh.tau(1), 1.0).unwrap();
        for m in 2..=16 {
            let b = fast_coefficients(&soe, &mesh, m).unwrap();
            assert_eq!(soe_first_coefficient(&soe, &mesh, m), b[0]);
        }
    }

    #[test]
    fn fids_history_cost_is_flat() {
        let mut p = zero_problem();
        p.source = Arc::new(|x, _| 1.0 - x * x);
        let dids = run(&p, &RunOptions::new(32, 2.0, 8)).unwrap().report;
        let fids = run(&p, &RunOptions::new(32, 2.0, 8).scheme(SchemeKind::Fids))
            .unwrap()
            .report;
        assert_eq!(dids.history_ops[31], 32 * dids.history_ops[0]);
        assert!(fids.history_ops[1..].windows(2).all(|w| w[0] == w[1]));
        assert_eq!(fids.history_memory, fids.n_exp.unwrap() * 7);
    }
}
