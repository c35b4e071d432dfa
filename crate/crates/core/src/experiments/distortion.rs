//! Distortion trials: how far the empirical norm of one random sketch
//! strays from the expectation norm over probe directions.

use std::path::Path;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AdversarialConfig, ExperimentConfig, ReferenceKind, Thresholds};
use super::plan::{parameter_plan, ParameterPlan};
use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::norms::{basis, Seminorm};
use crate::seed::{derive_seed, stream_rng, Rng};
use crate::sketch::{expectation_norm_closed, rademacher_average_exact, Frame, Sketch};
use crate::stats::quantile;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The norm that empirical values are compared against.
pub enum ReferenceNorm {
    /// Closed-form `|||·|||`.
    Closed { measure: MeasureSpec, frame: Arc<Frame> },
    /// Empirical norm of a large, fixed reference sample: one shared
    /// Monte Carlo reference for every probe of a trial.
    Sample(Sketch),
    /// Exact average over all sign patterns.
    Rademacher(Arc<Frame>),
}

impl ReferenceNorm {
    /// Which reference `kind` resolves to, without drawing anything.
    pub fn resolve(measure: &MeasureSpec, frame: &Frame, kind: ReferenceKind, mc_samples: usize) -> Result<&'static str> {
        let probe = vec![1.0; frame.n()];
        let closed_available = expectation_norm_closed(measure, frame, &probe)?.is_some();
        match kind {
            ReferenceKind::ClosedForm | ReferenceKind::Auto if closed_available => Ok("closed_form"),
            ReferenceKind::ClosedForm => Err(Error::ReferenceUnavailable(
                "no closed form for this measure/frame/norm combination".into(),
            )),
            _ if mc_samples == 0 => Err(Error::ReferenceUnavailable(
                "no closed form and the Monte Carlo reference budget is 0".into(),
            )),
            _ => Ok("monte_carlo"),
        }
    }

    /// Builds the reference for `measure`/`frame` according to `kind`.
    pub fn for_measure(
        measure: &MeasureSpec,
        frame: &Arc<Frame>,
        kind: ReferenceKind,
        mc_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        match Self::resolve(measure, frame, kind, mc_samples)? {
            "closed_form" => Ok(ReferenceNorm::Closed { measure: measure.clone(), frame: frame.clone() }),
            _ => Ok(ReferenceNorm::Sample(Sketch::from_measure(measure, frame.clone(), mc_samples, seed)?)),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ReferenceNorm::Closed { .. } => "closed_form",
            ReferenceNorm::Sample(_) => "monte_carlo",
            ReferenceNorm::Rademacher(_) => "exact_enumeration",
        }
    }
}

impl Seminorm for ReferenceNorm {
    fn dim(&self) -> usize {
        match self {
            ReferenceNorm::Closed { frame, .. } | ReferenceNorm::Rademacher(frame) => frame.n(),
            ReferenceNorm::Sample(s) => s.n(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            ReferenceNorm::Closed { measure, frame } => expectation_norm_closed(measure, frame, x)
                .ok()
                .flatten()
                .map_or(f64::NAN, |e| e.value),
            ReferenceNorm::Sample(s) => s.value(x),
            ReferenceNorm::Rademacher(frame) => rademacher_average_exact(frame, x, 1.0).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub rows: usize,
    pub min_ratio: f64,
    /// Minimizing direction, scaled to reference norm 1.
    pub argmin: Vec<f64>,
    pub max_ratio: f64,
    pub argmax: Vec<f64>,
    /// Ratio at the first basis vector (always probed).
    pub e1_ratio: f64,
    /// Basis directions on which the empirical norm vanishes.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub degenerate_directions: Vec<usize>,
}

impl TrialRecord {
    pub fn distortion(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }

    pub fn inside(&self, t: Thresholds) -> bool {
        self.min_ratio >= t.0 && self.max_ratio <= t.1
    }
}

struct RatioFn<'a> {
    sketch: &'a Sketch,
    reference: &'a ReferenceNorm,
}

impl RatioFn<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        let r = self.reference.value(x);
        if r > 0.0 {
            self.sketch.value(x) / r
        } else {
            f64::NAN
        }
    }
}

/// Derivative-free coordinate search on the scale-invariant ratio. Moves of
/// size `h·max|xᵢ|` along ±eᵢ are accepted when they improve; `h` halves
/// after a full sweep without improvement.
fn coordinate_search(f: &RatioFn, start: &[f64], start_value: f64, steps: usize, minimize: bool) -> (Vec<f64>, f64) {
    let n = start.len();
    let better = |a: f64, b: f64| if minimize { a < b } else { a > b };
    let mut x = start.to_vec();
    let mut best = start_value;
    let mut h = 0.5;
    let mut stale = 0;
    for step in 0..steps {
        let i = step % n;
        let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            break;
        }
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let old = x[i];
            x[i] = old + sign * h * scale;
            let v = f.eval(&x);
            if v.is_finite() && better(v, best) {
                best = v;
                improved = true;
                break;
            }
            x[i] = old;
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= n {
                h *= 0.5;
                stale = 0;
                if h < 1e-6 {
                    break;
                }
            }
        }
    }
    (x, best)
}

fn gaussian_direction(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Evaluates the ratio `|||x|||_N / |||x|||` over `e₁`, `probes` random
/// Gaussian directions and, when enabled, a multi-start local search.
pub fn extreme_ratios(
    index: usize,
    seed: u64,
    sketch: &Sketch,
    reference: &ReferenceNorm,
    probes: usize,
    adversarial: AdversarialConfig,
    rng: &mut Rng,
) -> TrialRecord {
    let n = sketch.n();
    let f = RatioFn { sketch, reference };
    let mut evaluated: Vec<(f64, Vec<f64>)> = Vec::with_capacity(probes + 1);
    let e1 = basis(n, 0);
    let e1_ratio = f.eval(&e1);
    evaluated.push((e1_ratio, e1));
    for _ in 0..probes {
        let x = gaussian_direction(rng, n);
        let r = f.eval(&x);
        if r.is_finite() {
            evaluated.push((r, x));
        }
    }
    let lowest = evaluated.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("e1 is always probed");
    let highest = evaluated.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("e1 is always probed");
    let (mut min_ratio, mut argmin) = (lowest.0, lowest.1.clone());
    let (mut max_ratio, mut argmax) = (highest.0, highest.1.clone());

    if adversarial.enabled && adversarial.restarts > 0 && adversarial.steps > 0 {
        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        order.sort_by(|&a, &b| evaluated[a].0.total_cmp(&evaluated[b].0));
        for &k in order.iter().take(adversarial.restarts) {
            let (x, v) = coordinate_search(&f, &evaluated[k].1, evaluated[k].0, adversarial.steps, true);
            if v < min_ratio {
                min_ratio = v;
                argmin = x;
            }
        }
        for &k in order.iter().rev().take(adversarial.restarts) {
            let (x, v) = coordinate_search(&f, &evaluated[k].1, evaluated[k].0, adversarial.steps, false);
            if v > max_ratio {
                max_ratio = v;
                argmax = x;
            }
        }
    }

    let normalize = |x: Vec<f64>| {
        let r = reference.value(&x);
        x.into_iter().map(|v| v / r).collect::<Vec<_>>()
    };
    TrialRecord {
        index,
        seed,
        rows: sketch.rows(),
        min_ratio,
        argmin: normalize(argmin),
        max_ratio,
        argmax: normalize(argmax),
        e1_ratio,
        degenerate_directions: sketch.degenerate_directions(),
    }
}

/// One sketch of `plan.rows` rows, compared against the reference norm.
pub fn run_distortion_trial(config: &ExperimentConfig, plan: &ParameterPlan, index: usize, trial_seed: u64) -> Result<TrialRecord> {
    let measure = config.measure.build(config.n)?;
    let frame = config.frame.build(config.n, &config.norm)?;
    trial_with(config, plan, &measure, &frame, index, trial_seed)
}

fn trial_with(
    config: &ExperimentConfig,
    plan: &ParameterPlan,
    measure: &MeasureSpec,
    frame: &Arc<Frame>,
    index: usize,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let sketch = Sketch::from_measure(measure, frame.clone(), plan.rows, derive_seed(trial_seed, 1))?;
    let reference = ReferenceNorm::for_measure(
        measure,
        frame,
        config.reference.kind,
        config.reference.mc_samples,
        derive_seed(trial_seed, 2),
    )?;
    let mut rng = stream_rng(trial_seed, 3);
    Ok(extreme_ratios(index, trial_seed, &sketch, &reference, config.probes, config.adversarial, &mut rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    #[serde(with = "super::config::extended_f64")]
    pub c_low: f64,
    #[serde(with = "super::config::extended_f64")]
    pub c_high: f64,
    pub failures: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
}

impl Quantiles {
    pub const LEVELS: [f64; 7] = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0];

    fn of(values: &[f64]) -> Self {
        Quantiles { levels: Self::LEVELS.to_vec(), values: Self::LEVELS.iter().map(|&l| quantile(values, l)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub thresholds: Vec<ThresholdOutcome>,
    pub min_ratio_quantiles: Quantiles,
    pub max_ratio_quantiles: Quantiles,
    pub mean_distortion: f64,
}

impl Aggregate {
    pub fn from_trials(trials: &[TrialRecord], thresholds: &[Thresholds]) -> Self {
        let mins: Vec<f64> = trials.iter().map(|t| t.min_ratio).collect();
        let maxs: Vec<f64> = trials.iter().map(|t| t.max_ratio).collect();
        let thresholds = thresholds
            .iter()
            .map(|&t| {
                let failures = trials.iter().filter(|r| !r.inside(t)).count();
                ThresholdOutcome { c_low: t.0, c_high: t.1, failures, frequency: failures as f64 / trials.len() as f64 }
            })
            .collect();
        Aggregate {
            trials: trials.len(),
            thresholds,
            min_ratio_quantiles: Quantiles::of(&mins),
            max_ratio_quantiles: Quantiles::of(&maxs),
            mean_distortion: trials.iter().map(TrialRecord::distortion).sum::<f64>() / trials.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub plan: ParameterPlan,
    pub reference: String,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    /// Wall-clock time; only present when requested, so that reports stay
    /// byte-reproducible by default.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<u64>,
    pub note: String,
}

const PROBE_NOTE: &str = "ratios are extremes over a finite probe set plus local search, so they bound the true \
     extremes from inside and failure counts can only be underestimated";

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per trial.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("index,seed,rows,min_ratio,max_ratio,e1_ratio,distortion\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.index,
                t.seed,
                t.rows,
                t.min_ratio,
                t.max_ratio,
                t.e1_ratio,
                t.distortion()
            ));
        }
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Seed of trial `i` for an experiment seeded with `base`.
pub fn trial_seed(base: u64, i: usize) -> u64 {
    derive_seed(base, i as u64)
}

/// Runs every trial (in parallel on the current rayon pool) and aggregates.
/// The result depends only on the config, not on the thread count. If the
/// config names an output path the JSON report is written there too.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let plan = parameter_plan(config.delta, config.n, config.constants)?;
    let measure = config.measure.build(config.n)?;
    let frame = config.frame.build(config.n, &config.norm)?;
    let reference_kind = ReferenceNorm::resolve(&measure, &frame, config.reference.kind, config.reference.mc_samples)?.to_string();
    let trials: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|i| trial_with(config, &plan, &measure, &frame, i, trial_seed(config.seed, i)))
        .collect::<Result<_>>()?;
    let aggregate = Aggregate::from_trials(&trials, &config.thresholds);
    let report = ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        plan,
        reference: reference_kind,
        trials,
        aggregate,
        runtime_ms: None,
        note: PROBE_NOTE.to_string(),
    };
    if let Some(path) = &config.output {
        report.write_json(path)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::ReferenceConfig;

    fn small(n: usize, delta: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::gaussian_l1(n, delta);
        c.trials = 6;
        c.probes = 20;
        c.adversarial.steps = 50;
        c
    }

    #[test]
    fn trial_is_deterministic_and_sandwiched() {
        let cfg = small(8, 0.5);
        let plan = parameter_plan(cfg.delta, cfg.n, cfg.constants).unwrap();
        let a = run_distortion_trial(&cfg, &plan, 0, 42).unwrap();
        let b = run_distortion_trial(&cfg, &plan, 0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.min_ratio <= a.e1_ratio && a.e1_ratio <= a.max_ratio);
        assert!(a.e1_ratio > 0.0);
        assert_eq!(a.rows, 12);
    }

    #[test]
    fn search_never_worsens_extremes() {
        let mut cfg = small(10, 0.5);
        cfg.adversarial.enabled = false;
        let plan = parameter_plan(cfg.delta, cfg.n, cfg.constants).unwrap();
        let plain = run_distortion_trial(&cfg, &plan, 0, 7).unwrap();
        cfg.adversarial.enabled = true;
        let searched = run_distortion_trial(&cfg, &plan, 0, 7).unwrap();
        assert!(searched.min_ratio <= plain.min_ratio);
        assert!(searched.max_ratio >= plain.max_ratio);
    }

    #[test]
    fn separable_extremes_are_found() {
        // ℓ₁ with the standard basis: the ratio is a weighted mean of
        // per-coordinate column means, so its extremes sit at basis vectors.
        let mut cfg = small(6, 0.5);
        cfg.adversarial.steps = 400;
        let plan = parameter_plan(cfg.delta, cfg.n, cfg.constants).unwrap();
        let measure = cfg.measure.build(cfg.n).unwrap();
        let frame = cfg.frame.build(cfg.n, &cfg.norm).unwrap();
        let rec = run_distortion_trial(&cfg, &plan, 0, 99).unwrap();
        let sketch = Sketch::from_measure(&measure, frame.clone(), plan.rows, derive_seed(99, 1)).unwrap();
        let per_coord: Vec<f64> = (0..6)
            .map(|i| sketch.value(&basis(6, i)) / crate::sketch::MEAN_ABS_GAUSSIAN)
            .collect();
        let lo = per_coord.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = per_coord.iter().copied().fold(0.0, f64::max);
        assert!(rec.min_ratio >= lo - 1e-12 && rec.min_ratio <= lo + 1e-3, "{} vs {lo}", rec.min_ratio);
        assert!(rec.max_ratio <= hi + 1e-12 && rec.max_ratio >= hi - 1e-3, "{} vs {hi}", rec.max_ratio);
    }

    #[test]
    fn vacuous_thresholds_never_fail() {
        let mut cfg = small(5, 0.5);
        cfg.thresholds = vec![Thresholds(0.0, f64::INFINITY), Thresholds(0.99, 1.01)];
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.aggregate.thresholds[0].failures, 0);
        assert!(report.aggregate.thresholds[1].failures > 0);
        assert_eq!(report.trials.len(), 6);
        assert_eq!(report.reference, "closed_form");
    }

    #[test]
    fn report_is_reproducible() {
        let cfg = small(6, 0.5);
        let a = run_experiment(&cfg).unwrap().to_json().unwrap();
        let b = run_experiment(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"schema_version\": 1"));
    }

    #[test]
    fn monte_carlo_reference_when_no_closed_form() {
        let mut cfg = small(4, 0.5);
        cfg.norm = crate::norms::NormKind::Lp { p: crate::norms::Exponent::TWO };
        cfg.reference = ReferenceConfig { mc_samples: 2000, ..Default::default() };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.reference, "monte_carlo");
        cfg.reference.mc_samples = 0;
        assert!(matches!(run_experiment(&cfg), Err(Error::ReferenceUnavailable(_))));
        cfg.reference = ReferenceConfig { kind: ReferenceKind::ClosedForm, mc_samples: 100 };
        assert!(matches!(run_experiment(&cfg), Err(Error::ReferenceUnavailable(_))));
    }

    #[test]
    fn output_path_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(3, 0.5);
        cfg.trials = 2;
        cfg.output = Some(dir.path().join("report.json"));
        let report = run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert_eq!(text, report.to_json().unwrap());
        cfg.output = Some(dir.path().join("missing/dir/report.json"));
        assert!(matches!(run_experiment(&cfg), Err(Error::Io(_))));
    }
}
