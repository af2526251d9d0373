//! Finite-difference discretization of the integral fractional Laplacian
//! (-Δ)^{α/2} on Ω = (-l, l) with homogeneous exterior data. The matrix is
//! symmetric Toeplitz and stored through its first column; vectors hold the
//! interior nodes x_i = -l + i·h, i = 1..N-1.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::DenseMatrix;
use crate::special::{ln_gamma, CompensatedSum};

/// c_{1,α} = 2^{α-1} α Γ((α+1)/2) / (√π Γ(1-α/2)).
pub fn normalization_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!(
            "fractional order must lie in (0,2), got {alpha}"
        )));
    }
    let log_mag = (alpha - 1.0) * std::f64::consts::LN_2 + ln_gamma(0.5 * (alpha + 1.0))
        - 0.5 * PI.ln()
        - ln_gamma(1.0 - 0.5 * alpha);
    Ok(alpha * log_mag.exp())
}

pub fn default_mu(alpha: f64) -> f64 {
    1.0 + 0.5 * alpha
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IflDiscretization {
    alpha: f64,
    mu: f64,
    nu: f64,
    kappa_mu: f64,
    l: f64,
    intervals: usize,
    h: f64,
    c_norm: f64,
    scale: f64,
    first_col: Vec<f64>,
}

/// (x+d)^ν - x^ν for x > 0 without cancellation.
fn forward_power_gap(x: f64, d: f64, nu: f64) -> f64 {
    x.powf(nu) * (nu * (d / x).ln_1p()).exp_m1()
}

pub fn build_ifl(alpha: f64, mu: f64, l: f64, intervals: usize) -> Result<IflDiscretization> {
    let c_norm = normalization_constant(alpha)?;
    if !(mu > alpha && mu <= 2.0) {
        return Err(invalid(format!(
            "splitting parameter must lie in (α, 2], got {mu}"
        )));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(invalid("domain half-width must be positive"));
    }
    if intervals < 3 {
        return Err(invalid(format!(
            "need at least 3 spatial intervals, got {intervals}"
        )));
    }
    let n = intervals as f64;
    let nu = mu - alpha;
    let kappa_mu = if mu == 2.0 { 2.0 } else { 1.0 };
    let h = 2.0 * l / n;
    let scale = c_norm / (nu * h.powf(alpha));
    let near = 2f64.powf(nu) + kappa_mu - 1.0;

    // Entry at offset k ≥ 2, without the leading -C.
    let far = |k: f64| forward_power_gap(k - 1.0, 2.0, nu) / (2.0 * k.powf(mu));

    let mut diag: CompensatedSum = (2..intervals).map(|ell| 2.0 * far(ell as f64)).collect();
    diag.add(forward_power_gap(n - 1.0, 1.0, nu) / n.powf(mu));
    diag.add(near);
    diag.add(2.0 * nu / (alpha * n.powf(alpha)));

    let mut first_col = Vec::with_capacity(intervals - 1);
    first_col.push(scale * diag.value());
    first_col.push(-scale * near / 2.0);
    first_col.extend((2..intervals - 1).map(|k| -scale * far(k as f64)));

    Ok(IflDiscretization {
        alpha,
        mu,
        nu,
        kappa_mu,
        l,
        intervals,
        h,
        c_norm,
        scale,
        first_col,
    })
}

impl IflDiscretization {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kappa_mu(&self) -> f64 {
        self.kappa_mu
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    /// Number of spatial intervals N.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Matrix dimension N - 1.
    pub fn dim(&self) -> usize {
        self.first_col.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// C^h_{α,μ} = c_{1,α} / (ν h^α).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn first_col(&self) -> &[f64] {
        &self.first_col
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.intervals)
            .map(|i| -self.l + i as f64 * self.h)
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::symmetric_toeplitz(&self.first_col)
    }

    pub fn dominance_gap(&self) -> f64 {
        diagonal_dominance_gap(&self.first_col)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# alpha={} mu={} l={} N={} h={}",
            self.alpha, self.mu, self.l, self.intervals, self.h
        )?;
        writeln!(out, "k,value")?;
        for (k, v) in self.first_col.iter().enumerate() {
            writeln!(out, "{},{:.17e}", k + 1, v)?;
        }
        Ok(())
    }
}

/// min_i (|c_ii| - Σ_{j≠i} |c_ij|) for the symmetric Toeplitz matrix with
/// the given first column, in O(n).
pub fn diagonal_dominance_gap(first_col: &[f64]) -> f64 {
    let n = first_col.len();
    if n == 0 {
        return 0.0;
    }
    // prefix[j] = Σ_{k=1}^{j} |c_k|
    let mut prefix = Vec::with_capacity(n);
    let mut acc = CompensatedSum::new();
    prefix.push(0.0);
    for c in &first_col[1..] {
        acc.add(c.abs());
        prefix.push(acc.value());
    }
    let d = first_col[0].abs();
    (0..n)
        .map(|i| d - prefix[i] - prefix[n - 1 - i])
        .fold(f64::INFINITY, f64::min)
}
