//! Manufactured test cases on Ω = (-1, 1), T = 1, with exact solution
//! u(x,t) = (1-x²)^{s+α/2} (t^γ + 1).
//!
//! The IFL of the spatial profile is a terminating ₂F₁ times a closed-form
//! constant, which makes the source term exact.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scheme::ProblemSpec;
use crate::special::{gamma, ln_gamma};

/// ₂F₁(a, -s; 1/2; x2) for integer s ≥ 0, a polynomial of degree s in x2.
pub fn hypergeom_terminating(a: f64, s: u32, x2: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..s {
        let k = k as f64;
        term *= (a + k) * (k - s as f64) / ((0.5 + k) * (k + 1.0)) * x2;
        sum += term;
    }
    sum
}

/// (1-x²)^{s+α/2}, zero outside (-1, 1).
pub fn bump(s: u32, alpha: f64, x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    ((s as f64 + 0.5 * alpha) * (-x * x).ln_1p()).exp()
}

/// 2^α Γ((α+1)/2) Γ(s+1+α/2) / (√π Γ(s+1)).
pub fn ifl_constant(s: u32, alpha: f64) -> f64 {
    let s = s as f64;
    let log = alpha * std::f64::consts::LN_2
        + ln_gamma(0.5 * (alpha + 1.0))
        + ln_gamma(s + 1.0 + 0.5 * alpha)
        - 0.5 * PI.ln()
        - ln_gamma(s + 1.0);
    log.exp()
}

/// (-Δ)^{α/2} applied to the zero-extended bump, evaluated for |x| ≤ 1.
pub fn exact_ifl_of_bump(s: u32, alpha: f64, x: f64) -> f64 {
    ifl_constant(s, alpha) * hypergeom_terminating(0.5 * (alpha + 1.0), s, x * x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    /// κ = (1+t) e^{0.8x+1}, s = 3
    Example1,
    /// κ = 7[ln(5+2x+t) + cos(xt)]/4, s = 1
    Example2,
}

impl ExampleKind {
    pub fn name(self) -> &'static str {
        match self {
            ExampleKind::Example1 => "example1",
            ExampleKind::Example2 => "example2",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "example1" => Ok(ExampleKind::Example1),
            "example2" => Ok(ExampleKind::Example2),
            other => Err(invalid(format!(
                "unknown case '{other}', expected example1 or example2"
            ))),
        }
    }

    pub fn regularity(self) -> u32 {
        match self {
            ExampleKind::Example1 => 3,
            ExampleKind::Example2 => 1,
        }
    }

    /// SOE tolerance used for this case unless overridden.
    pub fn default_epsilon(self) -> f64 {
        match self {
            ExampleKind::Example1 => 1e-10,
            ExampleKind::Example2 => 1e-9,
        }
    }

    pub fn kappa(self, x: f64, t: f64) -> f64 {
        match self {
            ExampleKind::Example1 => (1.0 + t) * (0.8 * x + 1.0).exp(),
            ExampleKind::Example2 => 7.0 * ((5.0 + 2.0 * x + t).ln() + (x * t).cos()) / 4.0,
        }
    }
}

pub fn example_source(
    kind: ExampleKind,
    s: u32,
    alpha: f64,
    gamma_order: f64,
    x: f64,
    t: f64,
) -> Result<f64> {
    if !(x.abs() <= 1.0) || !(t >= 0.0) {
        return Err(invalid(format!(
            "source evaluated outside the domain at x={x}, t={t}"
        )));
    }
    Ok(source_unchecked(
        kind,
        s,
        alpha,
        gamma_order,
        gamma(1.0 + gamma_order),
        x,
        t,
    ))
}

fn source_unchecked(
    kind: ExampleKind,
    s: u32,
    alpha: f64,
    gamma_order: f64,
    g: f64,
    x: f64,
    t: f64,
) -> f64 {
    g * bump(s, alpha, x)
        + kind.kappa(x, t) * exact_ifl_of_bump(s, alpha, x) * (t.powf(gamma_order) + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub kind: ExampleKind,
    pub s: u32,
    pub alpha: f64,
    pub gamma: f64,
}

impl ManufacturedCase {
    pub fn new(kind: ExampleKind, alpha: f64, gamma: f64) -> Self {
        Self {
            kind,
            s: kind.regularity(),
            alpha,
            gamma,
        }
    }

    pub fn by_name(name: &str, alpha: f64, gamma: f64) -> Result<Self> {
        Ok(Self::new(ExampleKind::from_name(name)?, alpha, gamma))
    }

    pub fn exact(&self, x: f64, t: f64) -> f64 {
        bump(self.s, self.alpha, x) * (t.powf(self.gamma) + 1.0)
    }

    pub fn spec(&self) -> ProblemSpec {
        let Self {
            kind,
            s,
            alpha,
            gamma: g,
        } = *self;
        let gamma_factor = gamma(1.0 + g);
        ProblemSpec {
            gamma: g,
            alpha,
            half_width: 1.0,
            final_time: 1.0,
            kappa: Arc::new(move |x, t| kind.kappa(x, t)),
            source: Arc::new(move |x, t| source_unchecked(kind, s, alpha, g, gamma_factor, x, t)),
            initial: Arc::new(move |x| bump(s, alpha, x)),
            exact: Some(Arc::new(move |x, t| bump(s, alpha, x) * (t.powf(g) + 1.0))),
            kappa_x_independent: false,
        }
    }
}
