//! Sum-of-exponentials compression of the Caputo kernel t^{-γ} and the
//! recurrence that evaluates the L1 history in O(N_exp) work per point.
//!
//! The kernel is written as t^{-γ} = (1/Γ(γ)) ∫_0^∞ e^{-ts} s^{γ-1} ds and
//! the s-integral is discretized by
//!
//! * an n-point Gauss–Jacobi rule (weight s^{γ-1}) on [0, a] with a ≈ 1/T,
//! * Gauss–Legendre rules in the variable ln s on [a·4^i, a·4^{i+1}], up to
//!   the point where e^{-δs} makes the remaining tail smaller than the
//!   tolerance.
//!
//! Every node count is picked adaptively against a high-order reference,
//! and the finished approximation is validated on a dense logarithmic grid
//! of [δ, T]; that a-posteriori check is what `build_soe` guarantees.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::special::{gamma, CompensatedSum};
use crate::time_mesh::{l1_weights, GradedMesh};

pub const DEFAULT_NODE_CAP: usize = 256;

/// Points of the logarithmic grid used for the a-posteriori error check.
const VALIDATION_POINTS: usize = 4000;
const REFERENCE_ORDER: usize = 64;
const SELECTION_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeApproximation {
    gamma: f64,
    epsilon: f64,
    delta: f64,
    final_time: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Max |t^{-γ} - Σ w_j e^{-s_j t}| over the validation grid.
    measured_error: f64,
}

impl SoeApproximation {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Exponents s_j.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn measured_error(&self) -> f64 {
        self.measured_error
    }

    /// Σ_j w_j e^{-s_j t}.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * (-s * t).exp())
            .collect::<CompensatedSum>()
            .value()
    }

    /// |t^{-γ} - SOE(t)|.
    pub fn error_at(&self, t: f64) -> f64 {
        (t.powf(-self.gamma) - self.evaluate(t)).abs()
    }

    /// Exact constructor from precomputed pairs, mostly for tests.
    pub fn from_parts(gamma: f64, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_len(nodes.len(), weights.len())?;
        if nodes.iter().chain(&weights).any(|&v| !(v > 0.0)) {
            return Err(invalid("SOE nodes and weights must be positive"));
        }
        Ok(Self {
            gamma,
            epsilon: f64::NAN,
            delta: f64::NAN,
            final_time: f64::NAN,
            nodes,
            weights,
            measured_error: f64::NAN,
        })
    }
}

/// Logarithmically spaced points covering [lo, hi], both ends included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi >= lo);
    let (a, b) = (lo.ln(), hi.ln());
    let mut pts: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    pts[0] = lo;
    pts[count - 1] = hi;
    pts
}

/// Acceptance rule for the a-posteriori check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Validation {
    /// Absolute error ≤ ε at every grid point.
    #[default]
    Strict,
    /// Absolute error ≤ max(ε, 16·eps_mach·t^{-γ}). For small δ and γ near 1 the
    /// kernel value itself carries more rounding than ε, and no double-precision
    /// sum can meet the strict bound there.
    RoundingAware,
}

pub fn build_soe(
    gamma: f64,
    epsilon: f64,
    delta: f64,
    final_time: f64,
) -> Result<SoeApproximation> {
    build_soe_with(
        gamma,
        epsilon,
        delta,
        final_time,
        DEFAULT_NODE_CAP,
        Validation::Strict,
    )
}

pub fn build_soe_with_cap(
    gamma: f64,
    epsilon: f64,
    delta: f64,
    final_time: f64,
    cap: usize,
) -> Result<SoeApproximation> {
    build_soe_with(gamma, epsilon, delta, final_time, cap, Validation::Strict)
}

pub fn build_soe_with(
    gamma: f64,
    epsilon: f64,
    delta: f64,
    final_time: f64,
    cap: usize,
    validation: Validation,
) -> Result<SoeApproximation> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "kernel exponent must lie in (0,1), got {gamma}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if !(delta > 0.0) || !(final_time > 0.0) || !final_time.is_finite() {
        return Err(invalid("cut-off and final time must be positive"));
    }
    if delta >= final_time {
        return Err(Error::Construction(format!(
            "empty interval: cut-off {delta} is not below the final time {final_time}"
        )));
    }

    let inv_gamma = 1.0 / crate::special::gamma(gamma);
    let probe = log_grid(delta, final_time, SELECTION_POINTS);
    let budget = epsilon / 8.0;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();

    // Gauss–Jacobi block on [0, a].
    let a = (1.0 / final_time).log2().floor().exp2();
    let jacobi_block = |n: usize| -> (Vec<f64>, Vec<f64>) {
        let rule = gauss_jacobi(n, 0.0, gamma - 1.0);
        let scale = (0.5 * a).powf(gamma) * inv_gamma;
        let s = rule.nodes.iter().map(|u| 0.5 * a * (1.0 + u)).collect();
        let w = rule.weights.iter().map(|w| w * scale).collect();
        (s, w)
    };
    let (js, jw) = pick_order(gamma, jacobi_block, 40, &probe, budget);
    nodes.extend(js);
    weights.extend(jw);

    // Geometric blocks in ln s, until the neglected tail beyond `upper` is below budget at t = δ.
    let tail_bound =
        |upper: f64| upper.powf(gamma - 1.0) * (-delta * upper).exp() / delta * inv_gamma;
    let mut intervals = Vec::new();
    let mut lo = a;
    while tail_bound(lo) > budget {
        intervals.push((lo, 4.0 * lo));
        lo *= 4.0;
        if intervals.len() > 200 {
            return Err(Error::Construction(
                "upper truncation did not converge".into(),
            ));
        }
    }
    let per_interval = budget / intervals.len().max(1) as f64;
    for &(lo, hi) in &intervals {
        let (x0, x1) = (lo.ln(), hi.ln());
        let block = |n: usize| -> (Vec<f64>, Vec<f64>) {
            let rule = gauss_legendre(n);
            let half = 0.5 * (x1 - x0);
            let mid = 0.5 * (x1 + x0);
            let xs: Vec<f64> = rule.nodes.iter().map(|u| mid + half * u).collect();
            let s = xs.iter().map(|x| x.exp()).collect();
            let w = xs
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * half * (gamma * x).exp() * inv_gamma)
                .collect();
            (s, w)
        };
        let (bs, bw) = pick_order(gamma, block, REFERENCE_ORDER, &probe, per_interval);
        nodes.extend(bs);
        weights.extend(bw);
    }

    // Drop exponentials that are invisible on [δ, T].
    let mut dropped = 0.0;
    let mut kept_s = Vec::with_capacity(nodes.len());
    let mut kept_w = Vec::with_capacity(nodes.len());
    for (s, w) in nodes.into_iter().zip(weights) {
        let size = w * (-s * delta).exp();
        if dropped + size < budget * 1e-2 {
            dropped += size;
        } else {
            kept_s.push(s);
            kept_w.push(w);
        }
    }

    if kept_s.len() > cap {
        return Err(Error::Construction(format!(
            "{} exponentials needed, cap is {cap}",
            kept_s.len()
        )));
    }
    if kept_s
        .iter()
        .chain(&kept_w)
        .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::Construction("non-positive node or weight".into()));
    }

    let mut soe = SoeApproximation {
        gamma,
        epsilon,
        delta,
        final_time,
        nodes: kept_s,
        weights: kept_w,
        measured_error: 0.0,
    };
    let mut measured = 0.0f64;
    for t in log_grid(delta, final_time, VALIDATION_POINTS) {
        let err = soe.error_at(t);
        measured = measured.max(err);
        let allowed = match validation {
            Validation::Strict => epsilon,
            Validation::RoundingAware => epsilon.max(16.0 * f64::EPSILON * t.powf(-gamma)),
        };
        if err > allowed {
            return Err(Error::Construction(format!(
                "measured error {err:.3e} at t = {t:.3e} exceeds tolerance {allowed:.3e}"
            )));
        }
    }
    soe.measured_error = measured;
    Ok(soe)
}

/// Smallest order whose block agrees with the `reference_order` block to `tol`
/// at every probe time.
fn pick_order(
    gamma: f64,
    block: impl Fn(usize) -> (Vec<f64>, Vec<f64>),
    reference_order: usize,
    probe: &[f64],
    tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let eval = |s: &[f64], w: &[f64], t: f64| -> f64 {
        s.iter().zip(w).map(|(s, w)| w * (-s * t).exp()).sum()
    };
    let (rs, rw) = block(reference_order);
    let reference: Vec<f64> = probe.iter().map(|&t| eval(&rs, &rw, t)).collect();
    // Differences below a few ulps of the kernel itself cannot be resolved.
    let floor: Vec<f64> = probe
        .iter()
        .map(|&t| tol.max(4.0 * f64::EPSILON * t.powf(-gamma)))
        .collect();
    for n in 1..reference_order {
        let (s, w) = block(n);
        let ok = probe
            .iter()
            .zip(reference.iter().zip(&floor))
            .all(|(&t, (&r, &f))| (eval(&s, &w, t) - r).abs() <= f);
        if ok {
            return (s, w);
        }
    }
    (rs, rw)
}

/// Explicit SOE coefficients b^{(m,γ)}_k, k = 1..=m (`b[k - 1]`).
///
/// b_m equals the exact L1 weight a_m; the rest integrate the compressed
/// kernel over [t_{k-1}, t_k]. Only used to cross-check [`FastHistory`].
pub fn fast_coefficients(
    soe: &SoeApproximation,
    mesh: &GradedMesh,
    level: usize,
) -> Result<Vec<f64>> {
    if level == 0 || level > mesh.steps() {
        return Err(invalid(format!(
            "time level {level} outside 1..={}",
            mesh.steps()
        )));
    }
    let a = l1_weights(mesh, soe.gamma(), level)?;
    let tm = mesh.t(level);
    let mut b: Vec<f64> = (1..level)
        .map(|k| {
            let tau = mesh.tau(k);
            let near = tm - mesh.t(k);
            soe.nodes()
                .iter()
                .zip(soe.weights())
                .map(|(s, w)| -w * (-s * near).exp() * (-s * tau).exp_m1() / (s * tau))
                .collect::<CompensatedSum>()
                .value()
        })
        .collect();
    b.push(a.get(level));
    Ok(b)
}

/// Per-exponential history accumulators
/// W_j^m = Σ_{k=1}^{m} (Δu^k/τ_k) ∫_{t_{k-1}}^{t_k} e^{-s_j (t_m - s)} ds,
/// one value per exponential and spatial point.
#[derive(Debug, Clone)]
pub struct FastHistory {
    soe: SoeApproximation,
    width: usize,
    /// Row-major, one row of `width` values per exponential.
    acc: Vec<f64>,
    level: usize,
}

impl FastHistory {
    pub fn new(soe: SoeApproximation, width: usize) -> Self {
        let acc = vec![0.0; soe.len() * width];
        Self {
            soe,
            width,
            acc,
            level: 0,
        }
    }

    pub fn soe(&self) -> &SoeApproximation {
        &self.soe
    }

    /// Number of levels absorbed so far.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of stored floating-point values, N_exp × width.
    pub fn stored_values(&self) -> usize {
        self.acc.len()
    }

    pub fn accumulator(&self, j: usize) -> &[f64] {
        &self.acc[j * self.width..(j + 1) * self.width]
    }

    /// Absorbs Δu^m = u^m - u^{m-1} over a step of length τ_m.
    /// Returns the number of multiply-adds performed.
    pub fn push(&mut self, delta_u: &[f64], tau: f64) -> Result<u64> {
        check_len(self.width, delta_u.len())?;
        if !(tau > 0.0) {
            return Err(invalid("step size must be positive"));
        }
        for (j, &s) in self.soe.nodes.iter().enumerate() {
            let decay = (-s * tau).exp();
            let gain = -(-s * tau).exp_m1() / (s * tau);
            let row = &mut self.acc[j * self.width..(j + 1) * self.width];
            for (w, du) in row.iter_mut().zip(delta_u) {
                *w = decay * *w + gain * du;
            }
        }
        self.level += 1;
        Ok((self.soe.len() * self.width) as u64)
    }

    /// Σ_j w_j e^{-s_j τ_m} W_j^{m-1}, the history contribution at the next level.
    pub fn history_term(&self, tau: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        for (j, (&s, &w)) in self.soe.nodes.iter().zip(&self.soe.weights).enumerate() {
            let c = w * (-s * tau).exp();
            for (o, a) in out.iter_mut().zip(self.accumulator(j)) {
                *o += c * a;
            }
        }
        out
    }
}

pub fn history_push(mut h: FastHistory, delta_u: &[f64], tau: f64) -> Result<FastHistory> {
    h.push(delta_u, tau)?;
    Ok(h)
}

/// Known part of the fast Caputo operator at the next level:
/// (1/Γ(1-γ)) [a_mm u^{m-1} - Σ_j w_j e^{-s_j τ_m} W_j^{m-1}],
/// so that FC D^γ u^m = (a_mm/Γ(1-γ)) u^m - (returned vector).
pub fn fast_caputo_rhs(
    h: &FastHistory,
    a_mm: f64,
    u_prev: &[f64],
    gamma_order: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    check_len(h.width, u_prev.len())?;
    let scale = 1.0 / gamma(1.0 - gamma_order);
    let hist = h.history_term(tau);
    Ok(u_prev
        .iter()
        .zip(&hist)
        .map(|(u, s)| scale * (a_mm * u - s))
        .collect())
}

/// Full fast Caputo approximation at the next level given u^m.
pub fn fast_caputo_apply(
    h: &FastHistory,
    a_mm: f64,
    u_prev: &[f64],
    u_cur: &[f64],
    gamma_order: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    check_len(h.width, u_cur.len())?;
    let known = fast_caputo_rhs(h, a_mm, u_prev, gamma_order, tau)?;
    let scale = a_mm / gamma(1.0 - gamma_order);
    Ok(u_cur
        .iter()
        .zip(&known)
        .map(|(u, k)| scale * u - k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time_mesh::{build_mesh, caputo_l1_apply};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn half_order_kernel_within_tolerance() {
        let soe = build_soe(0.5, 1e-10, 1e-4, 1.0).unwrap();
        let worst = log_grid(1e-4, 1.0, 10_000)
            .into_iter()
            .map(|t| soe.error_at(t))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10, "worst error {worst:e}");
        assert!(soe.nodes().iter().chain(soe.weights()).all(|&v| v > 0.0));
    }

    #[test]
    fn steep_cutoff_fits_under_cap() {
        let delta = (1.0f64 / 256.0).powi(3);
        let soe = build_soe(0.8, 1e-9, delta, 1.0).unwrap();
        assert!(soe.len() <= DEFAULT_NODE_CAP);
        let worst = log_grid(delta, 1.0, 10_000)
            .into_iter()
            .map(|t| soe.error_at(t))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "worst error {worst:e}");
    }

    #[test]
    fn empty_interval_is_a_construction_failure() {
        assert!(matches!(
            build_soe(0.5, 1e-8, 1.0, 1.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            build_soe(0.5, 1e-8, 2.0, 1.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            build_soe(1.5, 1e-8, 0.1, 1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn rounding_aware_validation_below_double_resolution() {
        // t^{-0.8} near δ = 2^{-30} is ~1.7e7, whose ulp already exceeds 1e-10.
        let delta = (1.0f64 / 1024.0).powi(3);
        assert!(matches!(
            build_soe(0.8, 1e-10, delta, 1.0),
            Err(Error::Construction(_))
        ));
        let soe = build_soe_with(
            0.8,
            1e-10,
            delta,
            1.0,
            DEFAULT_NODE_CAP,
            Validation::RoundingAware,
        )
        .unwrap();
        for t in log_grid(delta, 1.0, 500) {
            assert!(soe.error_at(t) <= 1e-10f64.max(16.0 * f64::EPSILON * t.powf(-0.8)));
        }
    }

    #[test]
    fn tiny_cap_is_a_construction_failure() {
        assert!(matches!(
            build_soe_with_cap(0.5, 1e-10, 1e-4, 1.0, 10),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn first_level_coefficient_is_l1_weight() {
        let mesh = build_mesh(8, 2.0, 1.0).unwrap();
        let soe = build_soe(0.5, 1e-10, mesh.tau(1), 1.0).unwrap();
        let b = fast_coefficients(&soe, &mesh, 1).unwrap();
        assert_eq!(b, vec![l1_weights(&mesh, 0.5, 1).unwrap().get(1)]);
        assert!(fast_coefficients(&soe, &mesh, 0).is_err());
        assert!(fast_coefficients(&soe, &mesh, 9).is_err());
    }

    #[test]
    fn fast_coefficients_track_l1_weights() {
        let mesh = build_mesh(8, 1.0, 1.0).unwrap();
        let soe = build_soe(0.5, 1e-12, mesh.tau(1), 1.0).unwrap();
        let b = fast_coefficients(&soe, &mesh, 8).unwrap();
        let a = l1_weights(&mesh, 0.5, 8).unwrap();
        let worst = b
            .iter()
            .zip(a.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "max |b - a| = {worst:e}");
        assert!(b.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn zero_increment_only_decays() {
        let soe = SoeApproximation::from_parts(0.5, vec![1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let mut h = FastHistory::new(soe, 1);
        h.push(&[1.0], 0.5).unwrap();
        let before = [h.accumulator(0)[0], h.accumulator(1)[0]];
        h.push(&[0.0], 0.25).unwrap();
        assert_relative_eq!(
            h.accumulator(0)[0],
            before[0] * (-0.25f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            h.accumulator(1)[0],
            before[1] * (-0.75f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn two_unit_steps_by_hand() {
        let soe = SoeApproximation::from_parts(0.5, vec![1.0], vec![1.0]).unwrap();
        let h = FastHistory::new(soe, 1);
        let h = history_push(h, &[1.0], 1.0).unwrap();
        let h = history_push(h, &[1.0], 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert_relative_eq!(
            h.accumulator(0)[0],
            e * (1.0 - e) + (1.0 - e),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            h.accumulator(0)[0],
            0.864_664_716_763_387,
            max_relative = 1e-14
        );
        assert_eq!(h.level(), 2);
    }

    #[test]
    fn recurrence_matches_explicit_coefficients() {
        let mesh = build_mesh(32, 2.0, 1.0).unwrap();
        let soe = build_soe(0.6, 1e-10, mesh.tau(1), 1.0).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let width = 4;
        let mut u: Vec<Vec<f64>> = vec![(0..width).map(|_| rng.gen_range(-1.0..1.0)).collect()];
        let mut h = FastHistory::new(soe.clone(), width);
        for m in 1..=32 {
            let hist = h.history_term(mesh.tau(m));
            let b = fast_coefficients(&soe, &mesh, m).unwrap();
            for i in 0..width {
                let direct: f64 = (1..m).map(|k| b[k - 1] * (u[k][i] - u[k - 1][i])).sum();
                let scale = (1..m)
                    .map(|k| (b[k - 1] * (u[k][i] - u[k - 1][i])).abs())
                    .sum::<f64>()
                    .max(1e-300);
                assert!((hist[i] - direct).abs() <= 1e-12 * scale, "m={m} i={i}");
            }
            let next: Vec<f64> = (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let du: Vec<f64> = next.iter().zip(&u[m - 1]).map(|(a, b)| a - b).collect();
            h.push(&du, mesh.tau(m)).unwrap();
            u.push(next);
        }
    }

    #[test]
    fn first_level_fast_caputo_is_difference_quotient() {
        let mesh = build_mesh(4, 2.0, 1.0).unwrap();
        let soe = build_soe(0.5, 1e-10, mesh.tau(1), 1.0).unwrap();
        let h = FastHistory::new(soe, 2);
        let a11 = l1_weights(&mesh, 0.5, 1).unwrap().get(1);
        let out = fast_caputo_apply(&h, a11, &[1.0, 2.0], &[2.0, 5.0], 0.5, mesh.tau(1)).unwrap();
        let g = gamma(0.5);
        assert_relative_eq!(out[0], a11 / g * 1.0, max_relative = 1e-14);
        assert_relative_eq!(out[1], a11 / g * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn fast_and_direct_caputo_agree() {
        let (gam, r, steps) = (0.5, 2.0, 64);
        let mesh = build_mesh(steps, r, 1.0).unwrap();
        let soe = build_soe(gam, 1e-10, mesh.tau(1), 1.0).unwrap();
        let u: Vec<Vec<f64>> = mesh
            .points()
            .iter()
            .map(|t| vec![t.powf(gam) + 1.0])
            .collect();
        let mut h = FastHistory::new(soe, 1);
        let g = gamma(1.0 - gam);
        for m in 1..=steps {
            let a = l1_weights(&mesh, gam, m).unwrap();
            let direct = caputo_l1_apply(&u[..m], &u[m], &a).unwrap()[0];
            let fast =
                fast_caputo_apply(&h, a.get(m), &u[m - 1], &u[m], gam, mesh.tau(m)).unwrap()[0];
            // kernel error ≤ ε against total variation ≤ 1, divided by Γ(1-γ)
            assert!(
                (fast - direct).abs() <= 2.0 * 1e-10 / g,
                "m={m}: {fast} vs {direct}"
            );
            h.push(&[u[m][0] - u[m - 1][0]], mesh.tau(m)).unwrap();
        }
    }

    #[test]
    fn constant_solution_has_no_fast_derivative() {
        let mesh = build_mesh(16, 2.0, 1.0).unwrap();
        let soe = build_soe(0.3, 1e-10, mesh.tau(1), 1.0).unwrap();
        let mut h = FastHistory::new(soe, 3);
        let u = [0.5, -2.0, 1.0];
        for m in 1..=16 {
            let a = l1_weights(&mesh, 0.3, m).unwrap();
            let out = fast_caputo_apply(&h, a.get(m), &u, &u, 0.3, mesh.tau(m)).unwrap();
            assert!(out.iter().all(|v| v.abs() <= 1e-10 * 2.0));
            h.push(&[0.0; 3], mesh.tau(m)).unwrap();
        }
    }

    #[test]
    fn push_rejects_wrong_width() {
        let soe = SoeApproximation::from_parts(0.5, vec![1.0], vec![1.0]).unwrap();
        let mut h = FastHistory::new(soe, 2);
        assert!(h.push(&[1.0], 0.1).is_err());
        assert!(h.push(&[1.0, 1.0], 0.0).is_err());
    }
}
