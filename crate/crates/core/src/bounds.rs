//! Concentration and small-ball inequalities in closed form, with empirical
//! estimators to check them against simulation.
//!
//! Every closed-form bound is computed in log-space first. The absolute
//! constants that the inequalities only assert to exist (Bernstein's `c`,
//! Latała's `c_b`) are parameters, never hard-coded.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::measures::MeasureSpec;
use crate::sketch::Frame;
use crate::stats::{quantile, ProbabilityEstimate};

/// Level of the convex symmetric set used in the small-ball argument.
pub const SMALL_BALL_LEVEL: f64 = 2.0 / 3.0;

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_unit_closed(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `t ln t`, extended by continuity to `0` at `t = 0`.
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `u(β) = β ln β + (1−β) ln(1−β)`, with value in `[−ln 2, 0]`.
pub fn entropy_u(beta: f64) -> Result<f64> {
    check_unit_closed("beta", beta)?;
    Ok(xlogx(beta) + xlogx(1.0 - beta))
}

/// Bernoulli relative entropy `I(β,p) = β ln(β/p) + (1−β) ln((1−β)/(1−p))`.
/// Defined for `β ∈ [0,1]` (endpoints by continuity) and `p ∈ (0,1)`.
pub fn chernoff_rate(beta: f64, p: f64) -> Result<f64> {
    check_unit_closed("beta", beta)?;
    check_unit_open("p", p)?;
    let a = if beta == 0.0 { 0.0 } else { beta * (beta / p).ln() };
    let b = if beta == 1.0 { 0.0 } else { (1.0 - beta) * ((1.0 - beta) / (1.0 - p)).ln() };
    Ok((a + b).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffParams {
    pub beta: f64,
    pub p: f64,
    pub n: u64,
}

impl ChernoffParams {
    pub fn new(beta: f64, p: f64, n: u64) -> Result<Self> {
        check_unit_open("beta", beta)?;
        check_unit_open("p", p)?;
        if n == 0 {
            return Err(invalid("number of trials must be positive"));
        }
        Ok(ChernoffParams { beta, p, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernoffRegime {
    BetaBelowP,
    BetaAboveP,
    BetaEqualsP,
}

/// Bounds on `P{Z₁+⋯+Z_N ≥ βN}` for i.i.d. Bernoulli(p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffBounds {
    /// Valid lower bound on the probability (`1 − e^{−NI}` when `β < p`).
    pub lower_success_prob_bound: f64,
    /// Valid upper bound on the probability (`e^{−NI}` when `β > p`).
    pub upper_tail_bound: f64,
    pub regime: ChernoffRegime,
}

pub fn chernoff_tail_bounds(params: ChernoffParams) -> ChernoffBounds {
    let ChernoffParams { beta, p, n } = params;
    let rate = chernoff_rate(beta, p).expect("ChernoffParams are validated");
    let log_tail = -(n as f64) * rate;
    if beta < p {
        ChernoffBounds {
            lower_success_prob_bound: -log_tail.exp_m1(),
            upper_tail_bound: 1.0,
            regime: ChernoffRegime::BetaBelowP,
        }
    } else if beta > p {
        ChernoffBounds { lower_success_prob_bound: 0.0, upper_tail_bound: log_tail.exp(), regime: ChernoffRegime::BetaAboveP }
    } else {
        ChernoffBounds { lower_success_prob_bound: 0.0, upper_tail_bound: 1.0, regime: ChernoffRegime::BetaEqualsP }
    }
}

/// `e^{−N I(β,p)}` computed through `p^{βN}(1−p)^{(1−β)N}e^{−Nu(β)}`, and
/// the cruder bound `(1−p)^{(1−β)N} 2^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub log_exact: f64,
    pub log_upper: f64,
}

impl Factorization {
    pub fn exact(&self) -> f64 {
        self.log_exact.exp()
    }

    pub fn upper(&self) -> f64 {
        self.log_upper.exp()
    }
}

pub fn analyse_factorization(params: ChernoffParams) -> Factorization {
    let ChernoffParams { beta, p, n } = params;
    let n = n as f64;
    let u = entropy_u(beta).expect("beta validated");
    let log_one_minus_p = (-p).ln_1p();
    let log_exact = beta * n * p.ln() + (1.0 - beta) * n * log_one_minus_p - n * u;
    let log_upper = (1.0 - beta) * n * log_one_minus_p + n * std::f64::consts::LN_2;
    Factorization { log_exact, log_upper }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiOneParams {
    /// Bound on the ψ₁ norm of each summand.
    pub b: f64,
    /// Absolute constant of the Bernstein inequality.
    pub c_bernstein: f64,
}

impl PsiOneParams {
    pub fn new(b: f64, c_bernstein: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite() && c_bernstein > 0.0 && c_bernstein.is_finite()) {
            return Err(invalid(format!("psi1 bound and Bernstein constant must be positive, got b={b}, c={c_bernstein}")));
        }
        Ok(PsiOneParams { b, c_bernstein })
    }

    /// Net level `t = 6·max(b/√c, b/c) + 1` making the union bound over a
    /// `5ⁿ`-point net at most `e^{−n}`.
    pub fn net_level(&self) -> f64 {
        let PsiOneParams { b, c_bernstein: c } = *self;
        6.0 * (b / c.sqrt()).max(b / c) + 1.0
    }

    /// Upper constant `C = 2t = 12·max(b/√c, b/c) + 2`.
    pub fn upper_constant(&self) -> f64 {
        2.0 * self.net_level()
    }
}

/// `ln(2 exp(−cN min(t/b, t²/b²)))`.
pub fn log_bernstein_tail(t: f64, params: PsiOneParams, n: u64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(invalid(format!("Bernstein deviation must be positive, got {t}")));
    }
    let r = t / params.b;
    Ok(std::f64::consts::LN_2 - params.c_bernstein * n as f64 * r.min(r * r))
}

/// `2 exp(−cN min(t/b, t²/b²))`; the `min` switches regime at `t = b`.
pub fn bernstein_tail(t: f64, params: PsiOneParams, n: u64) -> Result<f64> {
    log_bernstein_tail(t, params, n).map(f64::exp)
}

/// Log of the union bound `2 e^{−cN min((t−1)/b, (t−1)²/b²)} · 5ⁿ` for the
/// upper-bound net at level `t > 1`.
pub fn log_upper_net_failure(t: f64, params: PsiOneParams, rows: u64, n: u64) -> Result<f64> {
    if t.is_nan() || t <= 1.0 {
        return Err(invalid(format!("net level must exceed 1, got {t}")));
    }
    Ok(log_bernstein_tail(t - 1.0, params, rows)? + n as f64 * 5f64.ln())
}

/// Moment-based ψ₁ estimate `max_{q=1..10} (mean |X|^q)^{1/q} / q`.
///
/// This is an estimator of the order of the Orlicz norm, not the norm itself.
pub fn psi1_norm_estimate(samples: &[f64]) -> Result<f64> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(invalid(format!("psi1 estimate needs >= {MIN_SAMPLES} samples, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid("psi1 samples must be finite"));
    }
    let scale = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Factoring out the max keeps the estimator exactly homogeneous.
    let count = samples.len() as f64;
    let best = (1..=10)
        .map(|q| {
            let moment = samples.iter().map(|v| (v.abs() / scale).powi(q)).sum::<f64>() / count;
            moment.powf(1.0 / q as f64) / q as f64
        })
        .fold(0.0, f64::max);
    Ok(scale * best)
}

/// `(2/3)(1/2)^{(t+1)/2}`, the tail of the `t`-dilate of a symmetric convex
/// set of measure `2/3`. `t = 1` is accepted as the boundary value `1/3`.
pub fn borell_tail(t: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 {
        return Err(invalid(format!("Borell tail needs t >= 1, got {t}")));
    }
    Ok(SMALL_BALL_LEVEL * 0.5f64.powf((t + 1.0) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallConstants {
    /// `c₄ = (2/3)∫₁^∞ 2^{−(t+1)/2} dt = (2/3)/ln 2`.
    pub c4: f64,
    /// `γ = 1/(1+c₄)`.
    pub gamma: f64,
}

pub fn c4_constant() -> SmallBallConstants {
    let c4 = SMALL_BALL_LEVEL / std::f64::consts::LN_2;
    SmallBallConstants { c4, gamma: 1.0 / (1.0 + c4) }
}

/// `‖Σ aᵢxᵢvᵢ‖` for every row of `count` fresh samples.
fn combination_norms(measure: &MeasureSpec, frame: &Frame, x: &[f64], count: usize, seed: u64) -> Result<Vec<f64>> {
    check_len(frame.n(), measure.dim())?;
    check_len(frame.n(), x.len())?;
    if count == 0 {
        return Err(invalid("need at least one sample"));
    }
    let n = frame.n();
    let parts = measure.map_blocks(count, seed, |block| {
        let mut scratch = vec![0.0; frame.m()];
        block.chunks_exact(n).map(|a| frame.combination_norm(a, x, &mut scratch)).collect::<Vec<_>>()
    });
    Ok(parts.concat())
}

/// Empirical `μ{a : ‖Σ aᵢxᵢvᵢ‖ ≥ α}` with its binomial standard error.
pub fn small_ball_estimate(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    if alpha.is_nan() {
        return Err(invalid("alpha is NaN"));
    }
    let norms = combination_norms(measure, frame, x, samples, seed)?;
    let hits = norms.iter().filter(|&&v| v >= alpha).count();
    Ok(ProbabilityEstimate::from_counts(hits as u64, samples as u64))
}

/// Empirical `2/3`-quantile of `‖Σ aᵢxᵢvᵢ‖`, i.e. the level `γₓ` with `μ(Aₓ) ≈ 2/3`.
pub fn empirical_gamma_x(measure: &MeasureSpec, frame: &Frame, x: &[f64], samples: usize, seed: u64) -> Result<f64> {
    let norms = combination_norms(measure, frame, x, samples, seed)?;
    Ok(quantile(&norms, SMALL_BALL_LEVEL))
}

/// Empirical tail `μ{‖Σ aᵢxᵢvᵢ‖ > t·γₓ}` for each `t`, where `γₓ` is the
/// empirical `2/3`-quantile from the same samples.
pub fn borell_tail_check(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    t_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<(f64, ProbabilityEstimate, f64)>> {
    let norms = combination_norms(measure, frame, x, samples, seed)?;
    let level = quantile(&norms, SMALL_BALL_LEVEL);
    t_values
        .iter()
        .map(|&t| {
            let bound = borell_tail(t)?;
            let hits = norms.iter().filter(|&&v| v > t * level).count();
            Ok((t, ProbabilityEstimate::from_counts(hits as u64, samples as u64), bound))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatalaReport {
    /// Empirical `μ(Cₓ)`.
    pub measure_of_set: f64,
    /// `(t, μ̂(tCₓ) / (t·μ̂(Cₓ)))` per requested `t`.
    pub ratios: Vec<(f64, f64)>,
    /// Largest ratio: the empirical counterpart of `c_b`.
    pub max_ratio: f64,
}

/// Checks the linear small-ball scaling `μ(tC) ≤ c_b t μ(C)` for
/// `Cₓ = {a : ‖Σ aᵢxᵢvᵢ‖ ≤ level}`. All `t` share one sample.
pub fn latala_check(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    level: f64,
    t_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LatalaReport> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(invalid(format!("level must be positive, got {level}")));
    }
    if let Some(t) = t_values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(invalid(format!("dilation factors must lie in (0, 1], got {t}")));
    }
    let norms = combination_norms(measure, frame, x, samples, seed)?;
    let inside = norms.iter().filter(|&&v| v <= level).count();
    let measure_of_set = inside as f64 / samples as f64;
    if measure_of_set > SMALL_BALL_LEVEL {
        return Err(Error::LevelTooLarge { measure: measure_of_set, limit: SMALL_BALL_LEVEL });
    }
    if inside == 0 {
        return Err(invalid("level set is empty in the sample; raise the level or the sample size"));
    }
    let ratios: Vec<(f64, f64)> = t_values
        .iter()
        .map(|&t| {
            let hits = if t == 1.0 {
                inside
            } else {
                norms.iter().filter(|&&v| v <= t * level).count()
            };
            (t, hits as f64 / (t * inside as f64))
        })
        .collect();
    let max_ratio = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(LatalaReport { measure_of_set, ratios, max_ratio })
}
