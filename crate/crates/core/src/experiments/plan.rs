//! The constant chain behind the lower and upper distortion bounds.

use serde::{Deserialize, Serialize};

use crate::bounds::{c4_constant, PsiOneParams, SMALL_BALL_LEVEL};
use crate::error::{invalid, Result};

/// Absolute constants the bounds only assert to exist. All are configurable;
/// theoretical failure-bound evaluations are conditional on them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConstants {
    pub c_bernstein: f64,
    pub b_psi1: f64,
    /// `t = (c2·δ)^{2/δ}`.
    pub c2: f64,
    /// `c(δ) = (c3·δ)^{1+2/δ}`.
    pub c3: f64,
    /// Target failure exponent: the chain must give `≤ ½e^{−c'n}`.
    pub c_prime: f64,
    /// Linear small-ball constant for sets of measure `≤ 2/3`.
    pub c_b: f64,
}

impl Default for PlanConstants {
    fn default() -> Self {
        PlanConstants { c_bernstein: 0.125, b_psi1: 1.0, c2: 1e-5, c3: 0.1, c_prime: 0.01, c_b: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPlan {
    pub delta: f64,
    pub n: usize,
    /// `⌈(1+δ)n⌉` sketch rows.
    pub rows: usize,
    /// Required fraction of successful rows, `δ/(2(1+δ))`.
    pub beta: f64,
    pub t_latala: f64,
    pub theta: f64,
    pub gamma: f64,
    pub c4: f64,
    /// `c_b · 2/3`.
    pub c1: f64,
    /// `(c3·δ)^{1+2/δ}`.
    pub c_delta: f64,
    /// `βtγ − θC = βtγ/2`, the lower constant the chain actually delivers.
    pub c_lower_chain: f64,
    /// `12·max(b/√c, b/c) + 2`.
    pub c_upper: f64,
    /// `6·max(b/√c, b/c) + 1`.
    pub upper_net_level: f64,
    pub constants: PlanConstants,
    /// `ln(2^N (c₁t)^{(1+δ/2)n} (3/θ)ⁿ)`.
    pub log_failure_bound: f64,
    /// `ln(½ e^{−c'n})`.
    pub log_failure_target: f64,
    pub failure_bound_satisfied: bool,
    /// Largest `c2` for which the failure bound meets its target.
    pub c2_admissible_max: f64,
    pub warnings: Vec<String>,
}

/// `⌈(1+δ)n⌉`, ignoring floating-point noise at integer values.
pub fn oversampled_rows(delta: f64, n: usize) -> usize {
    let v = (1.0 + delta) * n as f64;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

pub fn parameter_plan(delta: f64, n: usize, constants: PlanConstants) -> Result<ParameterPlan> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive and finite, got {delta}")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let PlanConstants { c_bernstein, b_psi1, c2, c3, c_prime, c_b } = constants;
    for (name, v) in [("c2", c2), ("c3", c3), ("c_b", c_b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let psi = PsiOneParams::new(b_psi1, c_bernstein)?;
    let mut warnings = Vec::new();
    if delta >= 1.0 {
        warnings.push(format!(
            "delta = {delta} >= 1: the guarantee is stated for small delta and only inherited by larger values"
        ));
    }

    let rows = oversampled_rows(delta, n);
    let beta = delta / (2.0 * (1.0 + delta));
    let ln_t = (2.0 / delta) * (c2 * delta).ln();
    let t_latala = ln_t.exp();
    if t_latala == 0.0 {
        warnings.push(format!("t = exp({ln_t:.1}) underflows; theta and the lower constants are reported as 0"));
    }
    let small_ball = c4_constant();
    let gamma = small_ball.gamma;
    let c_upper = psi.upper_constant();
    let theta = beta * t_latala * gamma / (2.0 * c_upper);
    let c_delta = (c3 * delta).powf(1.0 + 2.0 / delta);
    let c_lower_chain = beta * t_latala * gamma - theta * c_upper;
    let c1 = c_b * SMALL_BALL_LEVEL;

    let nf = n as f64;
    let ln2 = std::f64::consts::LN_2;
    // Everything except the ln t terms; the bound is A + (δ/2)·n·ln t.
    let a = rows as f64 * ln2
        + (1.0 + delta / 2.0) * nf * c1.ln()
        + nf * (3.0f64.ln() + (2.0 * c_upper).ln() - beta.ln() - gamma.ln());
    let log_failure_bound = a + (delta / 2.0) * nf * ln_t;
    let log_failure_target = -ln2 - c_prime * nf;
    let ln_t_max = (log_failure_target - a) / ((delta / 2.0) * nf);
    let c2_admissible_max = (ln_t_max * delta / 2.0).exp() / delta;

    Ok(ParameterPlan {
        delta,
        n,
        rows,
        beta,
        t_latala,
        theta,
        gamma,
        c4: small_ball.c4,
        c1,
        c_delta,
        c_lower_chain,
        c_upper,
        upper_net_level: psi.net_level(),
        constants,
        log_failure_bound,
        log_failure_target,
        failure_bound_satisfied: log_failure_bound <= log_failure_target,
        c2_admissible_max,
        warnings,
    })
}
