//! Random sign-vector sketches compared with the exact Rademacher average.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::AdversarialConfig;
use super::distortion::{extreme_ratios, trial_seed, ReferenceNorm, TrialRecord};
use crate::error::{invalid, Result};
use crate::seed::{derive_seed, stream_rng};
use crate::sketch::{Frame, Sketch, MAX_ENUMERATION_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlmConfig {
    pub epsilon: f64,
    /// Rows per coordinate: the sketch has `⌈c_eps · n⌉` sign rows.
    pub c_eps: f64,
    pub trials: usize,
    pub probes: usize,
    pub seed: u64,
    pub adversarial: AdversarialConfig,
    /// Reference sample size when `n` is too large for exact enumeration.
    pub mc_reference_samples: usize,
}

impl Default for BlmConfig {
    fn default() -> Self {
        BlmConfig {
            epsilon: 0.3,
            c_eps: 500.0,
            trials: 100,
            probes: 50,
            seed: 0,
            adversarial: AdversarialConfig { enabled: false, ..Default::default() },
            mc_reference_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlmReport {
    pub n: usize,
    pub rows: usize,
    pub epsilon: f64,
    pub reference: String,
    pub trials: Vec<TrialRecord>,
    /// Trials whose every probe ratio lies in `[1−ε, 1+ε]`.
    pub successes: usize,
    pub success_frequency: f64,
}

pub fn blm_experiment(frame: &Arc<Frame>, config: &BlmConfig) -> Result<BlmReport> {
    let BlmConfig { epsilon, c_eps, trials, probes, seed, adversarial, mc_reference_samples } = *config;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(c_eps > 0.0 && c_eps.is_finite()) {
        return Err(invalid(format!("c_eps must be positive, got {c_eps}")));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let n = frame.n();
    let rows = super::plan::oversampled_rows(c_eps - 1.0, n);
    let exact = n <= MAX_ENUMERATION_DIM;
    if !exact && mc_reference_samples < 2 {
        return Err(invalid("n exceeds the enumeration limit and no Monte Carlo reference budget was given"));
    }
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let ts = trial_seed(seed, i);
            let sketch = Sketch::signs(frame.clone(), rows, derive_seed(ts, 1))?;
            let reference = if exact {
                ReferenceNorm::Rademacher(frame.clone())
            } else {
                ReferenceNorm::Sample(Sketch::signs(frame.clone(), mc_reference_samples, derive_seed(ts, 2))?)
            };
            let mut rng = stream_rng(ts, 3);
            Ok(extreme_ratios(i, ts, &sketch, &reference, probes, adversarial, &mut rng))
        })
        .collect::<Result<_>>()?;
    let successes = records
        .iter()
        .filter(|r| r.min_ratio >= 1.0 - epsilon && r.max_ratio <= 1.0 + epsilon)
        .count();
    Ok(BlmReport {
        n,
        rows,
        epsilon,
        reference: if exact { "exact_enumeration" } else { "monte_carlo" }.to_string(),
        success_frequency: successes as f64 / trials as f64,
        successes,
        trials: records,
    })
}
