//! JSON experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::plan::PlanConstants;
use crate::error::{invalid, Result};
use crate::measures::{Family, HitAndRun, MeasureSpec};
use crate::norms::{NormKind, NormOracle};
use crate::sketch::Frame;

/// `f64` that may be written as `"inf"` / `"-inf"` in JSON.
pub mod extended_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(D::Error::custom),
            },
        }
    }
}

/// Measure description without the dimension, which comes from `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub family: Family,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polytope_facets: Vec<Vec<f64>>,
    #[serde(default)]
    pub hit_and_run: HitAndRun,
}

fn unit() -> f64 {
    1.0
}

impl MeasureConfig {
    pub fn gaussian() -> Self {
        MeasureConfig { family: Family::GaussianIid, scale: 1.0, polytope_facets: Vec::new(), hit_and_run: HitAndRun::default() }
    }

    pub fn build(&self, n: usize) -> Result<MeasureSpec> {
        let m = if self.family == Family::UniformPolytope {
            let m = MeasureSpec::polytope(self.polytope_facets.clone())?;
            if m.dim() != n {
                return Err(invalid(format!("polytope facets live in R^{}, but n = {n}", m.dim())));
            }
            m
        } else {
            if !self.polytope_facets.is_empty() {
                return Err(invalid("polytope_facets only apply to uniform_polytope"));
            }
            MeasureSpec::new(self.family, n)?
        };
        Ok(m.with_scale(self.scale)?.with_hit_and_run(self.hit_and_run))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameConfig {
    #[default]
    StandardBasis,
    /// `n` normalized Gaussian vectors in ℝ^ambient_dim (default `n`).
    Random {
        #[serde(default)]
        ambient_dim: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
    Explicit { vectors: Vec<Vec<f64>> },
}

impl FrameConfig {
    pub fn ambient_dim(&self, n: usize) -> usize {
        match self {
            FrameConfig::StandardBasis => n,
            FrameConfig::Random { ambient_dim, .. } => ambient_dim.unwrap_or(n),
            FrameConfig::Explicit { vectors } => vectors.first().map_or(n, Vec::len),
        }
    }

    pub fn build(&self, n: usize, norm: &NormKind) -> Result<Arc<Frame>> {
        let ambient = NormOracle::new(norm.clone(), self.ambient_dim(n))?;
        let frame = match self {
            FrameConfig::StandardBasis => Frame::standard_basis(ambient),
            FrameConfig::Random { seed, .. } => Frame::random(n, ambient, *seed)?,
            FrameConfig::Explicit { vectors } => {
                if vectors.len() != n {
                    return Err(invalid(format!("explicit frame has {} vectors, n = {n}", vectors.len())));
                }
                Frame::new(vectors.clone(), ambient)?
            }
        };
        Ok(Arc::new(frame))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Closed form when available, Monte Carlo otherwise.
    #[default]
    Auto,
    ClosedForm,
    MonteCarlo,
}

/// How `|||x|||` is evaluated for ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// Rows of the shared per-trial Monte Carlo reference sample.
    pub mc_samples: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { kind: ReferenceKind::Auto, mc_samples: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversarialConfig {
    pub enabled: bool,
    pub restarts: usize,
    /// Coordinate moves per restart.
    pub steps: usize,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig { enabled: true, restarts: 3, steps: 200 }
    }
}

/// A `(c_low, C_high)` pair: a trial fails if some ratio leaves `[c_low, C_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds(
    #[serde(with = "extended_f64")] pub f64,
    #[serde(with = "extended_f64")] pub f64,
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub measure: MeasureConfig,
    pub norm: NormKind,
    #[serde(default)]
    pub frame: FrameConfig,
    pub n: usize,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default)]
    pub adversarial: AdversarialConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<Thresholds>,
    #[serde(default)]
    pub constants: PlanConstants,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_trials() -> usize {
    100
}

fn default_probes() -> usize {
    100
}

fn default_thresholds() -> Vec<Thresholds> {
    vec![Thresholds(0.2, 3.0)]
}

impl ExperimentConfig {
    /// Gaussian coefficients, standard basis, ℓ₁ ambient norm.
    pub fn gaussian_l1(n: usize, delta: f64) -> Self {
        ExperimentConfig {
            measure: MeasureConfig::gaussian(),
            norm: NormKind::Lp { p: crate::norms::Exponent::ONE },
            frame: FrameConfig::StandardBasis,
            n,
            delta,
            trials: default_trials(),
            probes: default_probes(),
            adversarial: AdversarialConfig::default(),
            reference: ReferenceConfig::default(),
            thresholds: default_thresholds(),
            constants: PlanConstants::default(),
            seed: 0,
            output: None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid(format!("delta must be positive and finite, got {}", self.delta)));
        }
        for Thresholds(lo, hi) in &self.thresholds {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(invalid(format!("threshold pair ({lo}, {hi}) is not an interval")));
            }
        }
        self.measure.build(self.n)?;
        self.frame.build(self.n, &self.norm)?;
        Ok(())
    }
}
