//! Graded temporal mesh and the L1 weights of the Caputo derivative.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::special::gamma;

/// Grid t_m = (m/M)^r T, m = 0..=M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedMesh {
    steps: usize,
    grading: f64,
    final_time: f64,
    t: Vec<f64>,
    tau: Vec<f64>,
}

impl GradedMesh {
    pub fn new(steps: usize, grading: f64, final_time: f64) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("number of time steps must be positive"));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(invalid(format!(
                "grading exponent must be >= 1, got {grading}"
            )));
        }
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(invalid(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let t: Vec<f64> = (0..=steps)
            .map(|m| (m as f64 / steps as f64).powf(grading) * final_time)
            .collect();
        let tau = t.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            steps,
            grading,
            final_time,
            t,
            tau,
        })
    }

    /// Number of time steps M.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Grid points t_0..t_M.
    pub fn points(&self) -> &[f64] {
        &self.t
    }

    pub fn t(&self, m: usize) -> f64 {
        self.t[m]
    }

    /// τ_m = t_m - t_{m-1}, for 1 <= m <= M.
    pub fn tau(&self, m: usize) -> f64 {
        self.tau[m - 1]
    }

    pub fn steps_sizes(&self) -> &[f64] {
        &self.tau
    }
}

pub fn build_mesh(steps: usize, grading: f64, final_time: f64) -> Result<GradedMesh> {
    GradedMesh::new(steps, grading, final_time)
}

/// Weights a^{(m,γ)}_k = (1/τ_k) ∫_{t_{k-1}}^{t_k} (t_m - s)^{-γ} ds for k = 1..=m.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    gamma: f64,
    level: usize,
    a: Vec<f64>,
}

impl L1Weights {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// a_k with the 1-based index of the formulas.
    pub fn get(&self, k: usize) -> f64 {
        self.a[k - 1]
    }

    /// All weights, `as_slice()[k - 1] = a_k`.
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    /// Σ_{k=1}^{m-1} (a_{k+1} - a_k) u^k + a_1 u^0, the part of the L1 sum
    /// that depends only on earlier levels. `history` holds u^0..u^{m-1}.
    pub fn history_sum(&self, history: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_len(self.level, history.len())?;
        let n = history[0].len();
        let mut out: Vec<f64> = history[0].iter().map(|u| self.a[0] * u).collect();
        for (k, row) in history.iter().enumerate().skip(1) {
            check_len(n, row.len())?;
            let c = self.a[k] - self.a[k - 1];
            for (o, u) in out.iter_mut().zip(row) {
                *o += c * u;
            }
        }
        Ok(out)
    }
}

/// far^{1-γ} - (far - tau)^{1-γ}, evaluated without cancellation.
fn power_difference(far: f64, tau: f64, last: bool, one_minus_gamma: f64) -> f64 {
    let head = (one_minus_gamma * far.ln()).exp();
    if last {
        return head;
    }
    let ratio_log = (-tau / far).ln_1p();
    -head * (one_minus_gamma * ratio_log).exp_m1()
}

pub fn l1_weights(mesh: &GradedMesh, gamma: f64, level: usize) -> Result<L1Weights> {
    check_weight_args(mesh, gamma, level)?;
    let a = (1..=level).map(|k| weight(mesh, gamma, level, k)).collect();
    Ok(L1Weights { gamma, level, a })
}

fn check_weight_args(mesh: &GradedMesh, gamma: f64, level: usize) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "Caputo order must lie in (0,1), got {gamma}"
        )));
    }
    if level == 0 || level > mesh.steps() {
        return Err(invalid(format!(
            "time level {level} outside 1..={}",
            mesh.steps()
        )));
    }
    Ok(())
}

fn weight(mesh: &GradedMesh, gamma: f64, level: usize, k: usize) -> f64 {
    let om = 1.0 - gamma;
    let far = mesh.t(level) - mesh.t(k - 1);
    power_difference(far, mesh.tau(k), k == level, om) / (mesh.tau(k) * om)
}

/// a^{(m,γ)}_m alone, bit-identical to the last entry of [`l1_weights`], in O(1).
pub fn l1_last_weight(mesh: &GradedMesh, gamma: f64, level: usize) -> Result<f64> {
    check_weight_args(mesh, gamma, level)?;
    Ok(weight(mesh, gamma, level, level))
}

/// a^{(m,γ)}_1 alone, in O(1).
pub fn l1_first_weight(mesh: &GradedMesh, gamma: f64, level: usize) -> Result<f64> {
    check_weight_args(mesh, gamma, level)?;
    Ok(weight(mesh, gamma, level, 1))
}

/// L1 approximation of the Caputo derivative at level m:
/// (1/Γ(1-γ)) [a_m u^m - Σ_{k=1}^{m-1} (a_{k+1} - a_k) u^k - a_1 u^0].
pub fn caputo_l1_apply(
    history: &[Vec<f64>],
    current: &[f64],
    weights: &L1Weights,
) -> Result<Vec<f64>> {
    let known = weights.history_sum(history)?;
    check_len(known.len(), current.len())?;
    let am = weights.get(weights.level());
    let scale = 1.0 / gamma(1.0 - weights.gamma());
    Ok(current
        .iter()
        .zip(&known)
        .map(|(u, h)| scale * (am * u - h))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn quadratic_mesh_points() {
        let mesh = build_mesh(4, 2.0, 1.0).unwrap();
        assert_eq!(mesh.points(), &[0.0, 0.0625, 0.25, 0.5625, 1.0]);
    }

    #[test]
    fn uniform_mesh_points() {
        let mesh = build_mesh(4, 1.0, 1.0).unwrap();
        assert_eq!(mesh.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        for m in 1..=4 {
            assert_relative_eq!(mesh.tau(m), 0.25, epsilon = 1e-16);
        }
    }

    #[test]
    fn cubic_mesh_first_point() {
        let mesh = build_mesh(8, 3.0, 2.0).unwrap();
        assert_eq!(mesh.t(1), 0.00390625);
        assert_eq!(mesh.t(8), 2.0);
    }

    #[test]
    fn mesh_rejects_bad_arguments() {
        assert!(build_mesh(0, 1.0, 1.0).is_err());
        assert!(build_mesh(4, 0.5, 1.0).is_err());
        assert!(build_mesh(4, 1.0, 0.0).is_err());
        assert!(build_mesh(4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn uniform_two_step_weights() {
        let mesh = build_mesh(2, 1.0, 1.0).unwrap();
        let w = l1_weights(&mesh, 0.5, 2).unwrap();
        assert_relative_eq!(w.get(2), 0.5f64.powf(-0.5) / 0.5, max_relative = 1e-14);
        assert_relative_eq!(w.get(2), 2.828_427_124_746_19, max_relative = 1e-14);
        assert_relative_eq!(w.get(1), (1.0 - 0.5f64.sqrt()) / 0.25, max_relative = 1e-14);
        assert_relative_eq!(w.get(1), 1.171_572_875_253_81, max_relative = 1e-14);
    }

    #[test]
    fn weights_reject_bad_arguments() {
        let mesh = build_mesh(4, 2.0, 1.0).unwrap();
        assert!(l1_weights(&mesh, 0.0, 1).is_err());
        assert!(l1_weights(&mesh, 1.0, 1).is_err());
        assert!(l1_weights(&mesh, 0.5, 0).is_err());
        assert!(l1_weights(&mesh, 0.5, 5).is_err());
    }

    /// Adaptive Simpson on the defining integral after the substitution
    /// t_m - s = lo + (hi - lo) v^{1/(1-γ)}, which removes the endpoint
    /// singularity at s = t_m without using the closed form.
    fn weight_by_quadrature(mesh: &GradedMesh, gamma: f64, m: usize, k: usize) -> f64 {
        let p = 1.0 / (1.0 - gamma);
        let tm = mesh.t(m);
        let lo = tm - mesh.t(k);
        let hi = tm - mesh.t(k - 1);
        let f = |v: f64| {
            if v == 0.0 {
                // only singular when lo = 0; the limit of the smooth integrand
                return if lo > 0.0 {
                    0.0
                } else {
                    hi.powf(1.0 - gamma) * p
                };
            }
            let w = lo + (hi - lo) * v.powf(p);
            w.powf(-gamma) * (hi - lo) * p * v.powf(p - 1.0)
        };
        adaptive_simpson(&f, 0.0, 1.0, 1e-15, 50) / mesh.tau(k)
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let left = simpson(f, a, c);
            let right = simpson(f, c, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, c, left, tol / 2.0, depth - 1) + rec(f, c, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, depth)
    }

    #[test]
    fn graded_weights_match_quadrature_and_increase() {
        let mesh = build_mesh(4, 2.0, 1.0).unwrap();
        let w = l1_weights(&mesh, 0.8, 4).unwrap();
        for k in 1..=4 {
            let q = weight_by_quadrature(&mesh, 0.8, 4, k);
            assert_relative_eq!(w.get(k), q, max_relative = 1e-12);
        }
        assert!(w.as_slice().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn constants_are_annihilated() {
        let mesh = build_mesh(16, 2.5, 1.0).unwrap();
        let w = l1_weights(&mesh, 0.3, 16).unwrap();
        let history = vec![vec![3.0, -1.0]; 16];
        let out = caputo_l1_apply(&history, &[3.0, -1.0], &w).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_step_reduces_to_difference_quotient() {
        let mesh = build_mesh(5, 2.0, 1.0).unwrap();
        let w = l1_weights(&mesh, 0.6, 1).unwrap();
        let out = caputo_l1_apply(&[vec![1.0]], &[2.5], &w).unwrap();
        assert_relative_eq!(out[0], w.get(1) / gamma(0.4) * 1.5, max_relative = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mesh = build_mesh(3, 1.0, 1.0).unwrap();
        let w = l1_weights(&mesh, 0.5, 2).unwrap();
        assert!(caputo_l1_apply(&[vec![0.0, 1.0], vec![0.0]], &[0.0, 0.0], &w).is_err());
        assert!(caputo_l1_apply(&[vec![0.0]], &[0.0], &w).is_err());
    }

    fn l1_error_at_final_time(gamma: f64, r: f64, steps: usize) -> f64 {
        let mesh = build_mesh(steps, r, 1.0).unwrap();
        let history: Vec<Vec<f64>> = (0..steps).map(|m| vec![mesh.t(m).powf(gamma)]).collect();
        let w = l1_weights(&mesh, gamma, steps).unwrap();
        let approx = caputo_l1_apply(&history, &[1.0], &w).unwrap()[0];
        (approx - gamma_fn(1.0 + gamma)).abs()
    }

    fn gamma_fn(x: f64) -> f64 {
        gamma(x)
    }

    #[test]
    fn truncation_error_decays_at_graded_rate() {
        let gamma = 0.4;
        let r = 2.0 / gamma;
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&m| l1_error_at_final_time(gamma, r, m))
            .collect();
        let floor = (r * gamma).min(2.0 - gamma) - 0.1;
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= floor, "rate {rate} below {floor}: {errs:?}");
        }
        assert!(l1_error_at_final_time(gamma, r, 64) < 1e-2);
    }

    proptest! {
        #[test]
        fn weights_positive_and_increasing(steps in 1usize..200, r in 1.0f64..4.0, gamma in 0.05f64..0.95, frac in 0.0f64..1.0) {
            let mesh = build_mesh(steps, r, 1.0).unwrap();
            let m = 1 + ((steps - 1) as f64 * frac) as usize;
            let w = l1_weights(&mesh, gamma, m).unwrap();
            prop_assert!(w.as_slice().iter().all(|&a| a > 0.0));
            prop_assert!(w.as_slice().windows(2).all(|p| p[0] < p[1]));
        }

        #[test]
        fn telescoping_sum_vanishes(steps in 2usize..300, r in 1.0f64..4.0, gamma in 0.05f64..0.95) {
            let mesh = build_mesh(steps, r, 1.0).unwrap();
            let w = l1_weights(&mesh, gamma, steps).unwrap();
            let a = w.as_slice();
            let diff_sum: f64 = a.windows(2).map(|p| p[1] - p[0]).sum();
            let residual = a[steps - 1] - diff_sum - a[0];
            prop_assert!(residual.abs() <= 1e-13 * a[steps - 1]);
        }

        #[test]
        fn mesh_invariants(steps in 1usize..500, r in 1.0f64..5.0, t_final in 0.1f64..10.0) {
            let mesh = build_mesh(steps, r, t_final).unwrap();
            prop_assert_eq!(mesh.t(0), 0.0);
            prop_assert_eq!(mesh.t(steps), t_final);
            prop_assert!(mesh.steps_sizes().iter().all(|&h| h > 0.0));
        }
    }
}
