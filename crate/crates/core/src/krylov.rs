//! Matrix-free CG and right-preconditioned BiCGSTAB.
//!
//! Both start from the zero vector and stop once ‖b - Mx‖₂/‖b‖₂ < tol. The
//! reported residual is recomputed from the iterate at exit, so recurrence
//! drift can never make a solve look converged when it is not.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::linalg::DenseMatrix;
use crate::toeplitz_algebra::{
    CirculantPreconditioner, SpectralWorkspace, ToeplitzOperator, ToeplitzWorkspace,
};

pub use crate::linalg::solve_dense;

pub const DEFAULT_TOL: f64 = 1e-10;

pub fn default_max_iters(n: usize) -> usize {
    10 * n.max(1)
}

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// y = M x
    fn apply(&mut self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner {
    fn dim(&self) -> usize;
    /// y = P⁻¹ x
    fn apply_inverse(&mut self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        DenseMatrix::dim(self)
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Adapter turning a closure into an operator or preconditioner.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: FnMut(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: FnMut(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

impl<F: FnMut(&[f64], &mut [f64])> Preconditioner for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_inverse(&mut self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// shift·v + diag(κ)·(A v) with A symmetric Toeplitz.
pub struct LevelOperator<'a> {
    shift: f64,
    kappa: &'a [f64],
    a: &'a ToeplitzOperator,
    ws: ToeplitzWorkspace,
    tmp: Vec<f64>,
    applications: u64,
}

impl<'a> LevelOperator<'a> {
    pub fn new(shift: f64, kappa: &'a [f64], a: &'a ToeplitzOperator) -> Result<Self> {
        check_len(a.dim(), kappa.len())?;
        Ok(Self {
            shift,
            kappa,
            a,
            ws: a.workspace(),
            tmp: vec![0.0; a.dim()],
            applications: 0,
        })
    }

    pub fn applications(&self) -> u64 {
        self.applications
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let col = self.a.first_col();
        DenseMatrix::from_fn(self.a.dim(), |i, j| {
            let base = self.kappa[i] * col[i.abs_diff(j)];
            if i == j {
                base + self.shift
            } else {
                base
            }
        })
    }
}

impl LinearOperator for LevelOperator<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.a
            .matvec_into(x, &mut self.tmp, &mut self.ws)
            .expect("operator dimensions fixed at construction");
        for ((yi, (xi, ai)), ki) in y.iter_mut().zip(x.iter().zip(&self.tmp)).zip(self.kappa) {
            *yi = self.shift * xi + ki * ai;
        }
        self.applications += 1;
    }
}

/// Circulant preconditioner bundled with its transform buffers.
pub struct CirculantApply<'a> {
    p: &'a CirculantPreconditioner,
    ws: SpectralWorkspace,
}

impl<'a> CirculantApply<'a> {
    pub fn new(p: &'a CirculantPreconditioner) -> Self {
        Self {
            p,
            ws: p.workspace(),
        }
    }
}

impl Preconditioner for CirculantApply<'_> {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn apply_inverse(&mut self, x: &[f64], y: &mut [f64]) {
        self.p
            .solve_into(x, y, &mut self.ws)
            .expect("preconditioner dimensions fixed at construction");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrylovReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    pub breakdown: Option<String>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(op: &mut dyn LinearOperator, x: &[f64], rhs: &[f64], r: &mut [f64]) -> f64 {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Overwrites `r` with the true residual and reports whether it meets `tol`.
fn verified(
    op: &mut dyn LinearOperator,
    x: &[f64],
    rhs: &[f64],
    r: &mut [f64],
    b_norm: f64,
    tol: f64,
) -> bool {
    true_residual(op, x, rhs, r) / b_norm < tol
}

fn check_dims(
    op: &dyn LinearOperator,
    precond: &Option<&mut dyn Preconditioner>,
    rhs: &[f64],
) -> Result<()> {
    check_len(op.dim(), rhs.len())?;
    if let Some(p) = precond {
        check_len(op.dim(), p.dim())?;
    }
    Ok(())
}

fn precondition(precond: &mut Option<&mut dyn Preconditioner>, x: &[f64], y: &mut [f64]) {
    match precond {
        Some(p) => p.apply_inverse(x, y),
        None => y.copy_from_slice(x),
    }
}

fn zero_rhs(n: usize) -> (Vec<f64>, KrylovReport) {
    let report = KrylovReport {
        iterations: 0,
        final_relative_residual: 0.0,
        converged: true,
        breakdown: None,
    };
    (vec![0.0; n], report)
}

/// Preconditioned conjugate gradients for SPD operators.
pub fn solve_cg(
    op: &mut dyn LinearOperator,
    mut precond: Option<&mut dyn Preconditioner>,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    check_dims(op, &precond, rhs)?;
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(zero_rhs(n));
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    precondition(&mut precond, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut breakdown = None;
    let mut iterations = 0;
    let mut rel = 1.0;

    while iterations < max_iters {
        iterations += 1;
        op.apply(&p, &mut q);
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            breakdown = Some(format!("non-positive curvature {curvature:e}"));
            break;
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = norm(&r) / b_norm;
        if rel < tol {
            rel = true_residual(op, &x, rhs, &mut r) / b_norm;
            if rel < tol {
                break;
            }
            // recurrence drifted: restart from the true residual
            precondition(&mut precond, &r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        precondition(&mut precond, &r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if breakdown.is_some() || rel >= tol {
        rel = true_residual(op, &x, rhs, &mut r) / b_norm;
    }
    let converged = rel < tol;
    Ok((
        x,
        KrylovReport {
            iterations,
            final_relative_residual: rel,
            converged,
            breakdown,
        },
    ))
}

/// Right-preconditioned BiCGSTAB: iterates on M P⁻¹ y = b with x = P⁻¹ y, so
/// the monitored residual is that of the original system. An exit after the
/// first half of an iteration counts as a full iteration.
pub fn solve_bicgstab(
    op: &mut dyn LinearOperator,
    mut precond: Option<&mut dyn Preconditioner>,
    rhs: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, KrylovReport)> {
    check_dims(op, &precond, rhs)?;
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok(zero_rhs(n));
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut breakdown = None;
    let mut iterations = 0;
    let tiny = f64::EPSILON * f64::EPSILON;
    let mut restart = false;

    while iterations < max_iters {
        if restart {
            r_hat.copy_from_slice(&r);
            p.iter_mut().chain(v.iter_mut()).for_each(|a| *a = 0.0);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            restart = false;
        }
        iterations += 1;
        let rho_next = dot(&r_hat, &r);
        if rho_next.abs() <= tiny * norm(&r_hat) * norm(&r) {
            // shadow residual orthogonal to the residual
            if breakdown.replace("rho vanished".to_string()).is_some() {
                break;
            }
            restart = true;
            iterations -= 1;
            continue;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precondition(&mut precond, &p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            breakdown = Some("r̂·v vanished".into());
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
            x[i] += alpha * p_hat[i];
        }
        if norm(&s) / b_norm < tol {
            if verified(op, &x, rhs, &mut r, b_norm, tol) {
                break;
            }
            restart = true;
            continue;
        }
        precondition(&mut precond, &s, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            breakdown = Some("t vanished".into());
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) / b_norm < tol {
            if verified(op, &x, rhs, &mut r, b_norm, tol) {
                break;
            }
            restart = true;
            continue;
        }
        if omega == 0.0 {
            breakdown = Some("omega vanished".into());
            break;
        }
    }
    let mut work = vec![0.0; n];
    let rel = true_residual(op, &x, rhs, &mut work) / b_norm;
    let converged = rel < tol;
    if converged {
        breakdown = None;
    }
    Ok((
        x,
        KrylovReport {
            iterations,
            final_relative_residual: rel,
            converged,
            breakdown,
        },
    ))
}
