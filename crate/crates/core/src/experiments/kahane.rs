//! L¹ versus Lᵖ averages of random sign sums.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sketch::{rademacher_average_exact, rademacher_average_mc, Frame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KahaneRatio {
    pub p: f64,
    /// `Ave‖Σ ±xᵢvᵢ‖`.
    pub avg1: f64,
    /// `(Ave‖Σ ±xᵢvᵢ‖^p)^{1/p}`.
    pub avgp: f64,
    /// `avgp / avg1`, at least 1 by the power-mean inequality.
    pub ratio: f64,
}

/// Relative slack below 1 attributed to summation rounding.
const POWER_MEAN_SLACK: f64 = 1e-12;

/// Monte Carlo mode evaluates both averages on the same sign draws.
pub fn kahane_ratio(frame: &Frame, x: &[f64], p: f64, mode: AverageMode, budget: usize, seed: u64) -> Result<KahaneRatio> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must be finite and >= 1, got {p}")));
    }
    let (avg1, avgp) = match mode {
        AverageMode::Exact => {
            let a1 = rademacher_average_exact(frame, x, 1.0)?;
            let ap = if p == 1.0 { a1 } else { rademacher_average_exact(frame, x, p)? };
            (a1, ap)
        }
        AverageMode::MonteCarlo => {
            let a1 = rademacher_average_mc(frame, x, 1.0, budget, seed)?.value;
            let ap = if p == 1.0 { a1 } else { rademacher_average_mc(frame, x, p, budget, seed)?.value };
            (a1, ap)
        }
    };
    if avg1 == 0.0 {
        return Ok(KahaneRatio { p, avg1, avgp, ratio: 1.0 });
    }
    let raw = avgp / avg1;
    assert!(
        raw >= 1.0 - POWER_MEAN_SLACK,
        "power-mean inequality violated: Lp/L1 = {raw} for p = {p}"
    );
    Ok(KahaneRatio { p, avg1, avgp, ratio: raw.max(1.0) })
}
