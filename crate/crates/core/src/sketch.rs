//! The expectation norm `|||x||| = E‖Σ aᵢxᵢvᵢ‖`, its random empirical
//! counterpart over `N` sampled coefficient rows, and Rademacher averages.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::measures::{Family, MeasureSpec};
use crate::norms::{NormOracle, Seminorm};
use crate::seed::{blocks, stream_rng, BLOCK_ROWS};
use crate::stats::Moments;

/// Largest `n` accepted by [`rademacher_average_exact`].
pub const MAX_ENUMERATION_DIM: usize = 22;

/// `√(2/π)`, the mean of `|g|` for a standard Gaussian `g`.
pub const MEAN_ABS_GAUSSIAN: f64 = 0.797_884_560_802_865_4;

/// Unit vectors `v₁,…,vₙ` in ℝᵐ together with the ambient norm on ℝᵐ.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    vectors: Vec<Vec<f64>>,
    ambient: NormOracle,
    standard: bool,
}

impl Frame {
    /// Normalizes every vector to ambient norm 1. Zero vectors are rejected.
    pub fn new(vectors: Vec<Vec<f64>>, ambient: NormOracle) -> Result<Self> {
        if vectors.is_empty() {
            return Err(invalid("frame needs at least one vector"));
        }
        let m = ambient.dim();
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            check_len(m, v.len())?;
            let norm = ambient.eval(&v);
            if !(norm.is_finite() && norm > 0.0) {
                return Err(invalid("frame vectors must be nonzero and finite"));
            }
            out.push(v.iter().map(|c| c / norm).collect::<Vec<_>>());
        }
        let standard = out.len() == m
            && out.iter().enumerate().all(|(i, v)| {
                v.iter().enumerate().all(|(j, &c)| c == if i == j { 1.0 } else { 0.0 })
            });
        Ok(Frame { vectors: out, ambient, standard })
    }

    /// `vᵢ = eᵢ` (rescaled to unit ambient norm when the norm is weighted).
    pub fn standard_basis(ambient: NormOracle) -> Self {
        let m = ambient.dim();
        let vectors = (0..m).map(|i| crate::norms::basis(m, i)).collect();
        Frame::new(vectors, ambient).expect("basis vectors have positive norm")
    }

    /// `n` independent Gaussian directions in ℝᵐ, normalized.
    pub fn random(n: usize, ambient: NormOracle, seed: u64) -> Result<Self> {
        let m = ambient.dim();
        let mut rng = stream_rng(seed, 0);
        let vectors = (0..n)
            .map(|_| (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        Frame::new(vectors, ambient)
    }

    /// Number of vectors `n`.
    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    /// Ambient dimension `m`.
    pub fn m(&self) -> usize {
        self.ambient.dim()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn ambient(&self) -> &NormOracle {
        &self.ambient
    }

    /// True when `vᵢ = eᵢ` exactly.
    pub fn is_standard_basis(&self) -> bool {
        self.standard
    }

    /// `Σᵢ aᵢxᵢvᵢ ∈ ℝᵐ`.
    pub fn weighted_sum(&self, a: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), a.len())?;
        check_len(self.n(), x.len())?;
        let mut out = vec![0.0; self.m()];
        self.combine_into(a, x, &mut out);
        Ok(out)
    }

    fn combine_into(&self, a: &[f64], x: &[f64], out: &mut [f64]) {
        if self.standard {
            for ((o, ai), xi) in out.iter_mut().zip(a).zip(x) {
                *o = ai * xi;
            }
            return;
        }
        out.fill(0.0);
        for ((v, ai), xi) in self.vectors.iter().zip(a).zip(x) {
            let w = ai * xi;
            if w != 0.0 {
                for (o, vk) in out.iter_mut().zip(v) {
                    *o += w * vk;
                }
            }
        }
    }

    /// `‖Σᵢ aᵢxᵢvᵢ‖` using `scratch` (length `m`) as workspace.
    pub(crate) fn combination_norm(&self, a: &[f64], x: &[f64], scratch: &mut [f64]) -> f64 {
        if self.standard && self.ambient.is_l1() {
            return a.iter().zip(x).map(|(ai, xi)| (ai * xi).abs()).sum();
        }
        self.combine_into(a, x, scratch);
        self.ambient.eval(scratch)
    }
}

/// A Monte Carlo or exact value of a norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Zero only for closed-form or exact results.
    pub std_error: f64,
    pub samples_used: u64,
}

impl NormEstimate {
    pub fn exact(value: f64) -> Self {
        NormEstimate { value, std_error: 0.0, samples_used: 0 }
    }

    fn from_moments(m: &Moments) -> Self {
        NormEstimate { value: m.mean, std_error: m.std_error(), samples_used: m.count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SignsTag {
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SignsLaw {
    family: SignsTag,
    dim: usize,
}

/// Where the rows of a sketch come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientLaw {
    Measure(MeasureSpec),
    /// Independent uniform ±1 entries.
    Signs(#[serde(with = "signs_law")] usize),
}

mod signs_law {
    use super::{SignsLaw, SignsTag};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(dim: &usize, s: S) -> Result<S::Ok, S::Error> {
        SignsLaw { family: SignsTag::Rademacher, dim: *dim }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        SignsLaw::deserialize(d).map(|l| l.dim)
    }
}

impl CoefficientLaw {
    pub fn dim(&self) -> usize {
        match self {
            CoefficientLaw::Measure(m) => m.dim(),
            CoefficientLaw::Signs(n) => *n,
        }
    }

    /// Draws `rows × dim` coefficients, bit-reproducible from `seed`.
    pub fn draw(&self, rows: usize, seed: u64) -> Result<Vec<f64>> {
        if rows == 0 {
            return Err(invalid("a sketch needs at least one row"));
        }
        match self {
            CoefficientLaw::Measure(m) => Ok(m.sample(rows, seed)?.into_points()),
            CoefficientLaw::Signs(n) => {
                let n = *n;
                let mut out = vec![0.0; rows * n];
                out.par_chunks_mut(BLOCK_ROWS * n).enumerate().for_each(|(b, chunk)| {
                    let mut rng = stream_rng(seed, b as u64);
                    for v in chunk.iter_mut() {
                        *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    }
                });
                Ok(out)
            }
        }
    }
}

/// `N` coefficient rows `a(1),…,a(N)` and the frame they act on.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    coeffs: Vec<f64>,
    rows: usize,
    n: usize,
    seed: u64,
    law: CoefficientLaw,
    frame: Arc<Frame>,
    /// Per-coordinate mean of `|a(j)ᵢ|`, for the separable ℓ₁/standard-basis case.
    column_abs_means: Option<Vec<f64>>,
}

impl Sketch {
    pub fn draw(law: CoefficientLaw, frame: Arc<Frame>, rows: usize, seed: u64) -> Result<Self> {
        check_len(frame.n(), law.dim())?;
        let coeffs = law.draw(rows, seed)?;
        Self::from_coefficients(coeffs, law, frame, seed)
    }

    pub fn from_measure(measure: &MeasureSpec, frame: Arc<Frame>, rows: usize, seed: u64) -> Result<Self> {
        Self::draw(CoefficientLaw::Measure(measure.clone()), frame, rows, seed)
    }

    pub fn signs(frame: Arc<Frame>, rows: usize, seed: u64) -> Result<Self> {
        let n = frame.n();
        Self::draw(CoefficientLaw::Signs(n), frame, rows, seed)
    }

    /// Wraps explicit coefficients (row-major `rows × n`). `seed` is recorded
    /// as provenance only.
    pub fn from_coefficients(coeffs: Vec<f64>, law: CoefficientLaw, frame: Arc<Frame>, seed: u64) -> Result<Self> {
        let n = frame.n();
        check_len(n, law.dim())?;
        if coeffs.is_empty() || !coeffs.len().is_multiple_of(n) {
            return Err(invalid(format!("{} coefficients do not form rows of length {n}", coeffs.len())));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sketch coefficients must be finite"));
        }
        let rows = coeffs.len() / n;
        let column_abs_means = (frame.is_standard_basis() && frame.ambient().is_l1()).then(|| {
            let mut sums = vec![0.0; n];
            for row in coeffs.chunks_exact(n) {
                for (s, a) in sums.iter_mut().zip(row) {
                    *s += a.abs();
                }
            }
            sums.iter().map(|s| s / rows as f64).collect()
        });
        Ok(Sketch { coeffs, rows, n, seed, law, frame, column_abs_means })
    }

    /// Redraws the coefficients from `(law, rows, seed)`.
    pub fn regenerate(&self) -> Result<Self> {
        Self::draw(self.law.clone(), self.frame.clone(), self.rows, self.seed)
    }

    /// `N`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> &CoefficientLaw {
        &self.law
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.n..(j + 1) * self.n]
    }

    /// `|||x|||_N = (1/N) Σⱼ ‖Σᵢ a(j)ᵢxᵢvᵢ‖`.
    pub fn empirical_norm(&self, x: &[f64]) -> Result<f64> {
        check_len(self.n, x.len())?;
        Ok(self.eval(x))
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match &self.column_abs_means {
            Some(w) => w.iter().zip(x).map(|(w, xi)| w * xi.abs()).sum(),
            None => self.eval_rows(x),
        }
    }

    /// Row-by-row evaluation, bypassing the separable shortcut.
    pub fn eval_rows(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; self.frame.m()];
        let total: f64 = self
            .coeffs
            .chunks_exact(self.n)
            .map(|a| self.frame.combination_norm(a, x, &mut scratch))
            .sum();
        total / self.rows as f64
    }

    /// Coordinates `i` with `|||eᵢ|||_N = 0`; nonempty means the empirical
    /// norm is only a seminorm.
    pub fn degenerate_directions(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.eval(&crate::norms::basis(self.n, i)) == 0.0)
            .collect()
    }

    /// CSV export: a `#` comment line with a JSON descriptor, a column
    /// header, then one row per `a(j)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SketchHeader {
            schema_version: SKETCH_SCHEMA_VERSION,
            n: self.n,
            rows: self.rows,
            seed: self.seed,
            law: self.law.clone(),
        };
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        let cols: Vec<String> = (1..=self.n).map(|i| format!("a{i}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for row in self.coeffs.chunks_exact(self.n) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads a sketch written by [`Sketch::write_csv`] and attaches `frame`.
    pub fn read_csv<R: BufRead>(r: R, frame: Arc<Frame>) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty sketch file".into()))??;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing descriptor comment line".into()))?;
        let header: SketchHeader = serde_json::from_str(json.trim())?;
        if header.schema_version != SKETCH_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", header.schema_version)));
        }
        lines.next().ok_or_else(|| Error::Parse("missing column header".into()))??;
        let mut coeffs = Vec::with_capacity(header.rows * header.n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = coeffs.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|e| Error::Parse(format!("bad value {field:?}: {e}")))?;
                coeffs.push(v);
            }
            check_len(header.n, coeffs.len() - before)?;
        }
        check_len(header.rows * header.n, coeffs.len())?;
        Self::from_coefficients(coeffs, header.law, frame, header.seed)
    }
}

impl Seminorm for Sketch {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

pub const SKETCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SketchHeader {
    schema_version: u32,
    n: usize,
    rows: usize,
    seed: u64,
    law: CoefficientLaw,
}

fn check_frame(measure: &MeasureSpec, frame: &Frame, x: &[f64]) -> Result<()> {
    check_len(frame.n(), measure.dim())?;
    check_len(frame.n(), x.len())
}

/// Monte Carlo estimate of `|||x|||` with standard error `s/√mc_samples`.
pub fn expectation_norm_mc(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    check_frame(measure, frame, x)?;
    if mc_samples < 2 {
        return Err(invalid("expectation_norm_mc needs at least 2 samples"));
    }
    let n = frame.n();
    let parts = measure.map_blocks(mc_samples, seed, |block| {
        let mut scratch = vec![0.0; frame.m()];
        block
            .chunks_exact(n)
            .map(|a| frame.combination_norm(a, x, &mut scratch))
            .collect::<Moments>()
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(NormEstimate::from_moments(&total))
}

/// Closed-form `|||x|||` for the standard-basis/ℓ₁ frame under Gaussian or
/// Laplace coefficients; `None` for every other combination.
pub fn expectation_norm_closed(measure: &MeasureSpec, frame: &Frame, x: &[f64]) -> Result<Option<NormEstimate>> {
    check_frame(measure, frame, x)?;
    if !(frame.is_standard_basis() && frame.ambient().is_l1()) {
        return Ok(None);
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let per_unit = match measure.family() {
        Family::GaussianIid => MEAN_ABS_GAUSSIAN,
        Family::ExponentialSymmetricIid => 1.0,
        _ => return Ok(None),
    };
    Ok(Some(NormEstimate::exact(per_unit * measure.scale() * l1)))
}

/// Closed form when available, otherwise Monte Carlo.
pub fn expectation_norm(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<NormEstimate> {
    match expectation_norm_closed(measure, frame, x)? {
        Some(e) => Ok(e),
        None => expectation_norm_mc(measure, frame, x, mc_samples, seed),
    }
}

/// Rescales `x` onto the `|||·|||` unit sphere. The result has norm 1 only
/// up to the returned estimate's standard error.
pub fn sphere_normalize(
    measure: &MeasureSpec,
    frame: &Frame,
    x: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, NormEstimate)> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(invalid("cannot normalize the zero vector"));
    }
    let est = expectation_norm(measure, frame, x, mc_samples, seed)?;
    if est.value <= 0.0 {
        return Err(invalid("expectation norm estimate is zero"));
    }
    Ok((x.iter().map(|v| v / est.value).collect(), est))
}

/// `(2⁻ⁿ Σ_{ε∈{±1}ⁿ} ‖Σ εᵢxᵢvᵢ‖^p)^{1/p}` by full enumeration.
pub fn rademacher_average_exact(frame: &Frame, x: &[f64], p: f64) -> Result<f64> {
    check_len(frame.n(), x.len())?;
    check_power(p)?;
    let n = frame.n();
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::EnumerationTooLarge { n, max: MAX_ENUMERATION_DIM });
    }
    let terms = rademacher_power_sums(frame, x, p);
    let count = (1u64 << (n - 1)) as f64;
    let mean = terms / count;
    Ok(if p == 1.0 { mean } else { mean.powf(1.0 / p) })
}

fn check_power(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("averaging power must be finite and >= 1, got {p}")))
    }
}

/// Σ over sign patterns with `ε₁ = +1` (the other half is the mirror image,
/// which has the same norm) of `‖Σ εᵢxᵢvᵢ‖^p`.
fn rademacher_power_sums(frame: &Frame, x: &[f64], p: f64) -> f64 {
    let n = frame.n();
    let free = n - 1;
    let low_bits = free.min(12);
    let chunks = 1u64 << (free - low_bits);
    let cols: Vec<Vec<f64>> = frame
        .vectors()
        .iter()
        .zip(x)
        .map(|(v, xi)| v.iter().map(|c| c * xi).collect())
        .collect();
    let ambient = frame.ambient();
    let pow = |v: f64| if p == 1.0 { v } else { v.powf(p) };
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut signs = vec![1.0; n];
            for b in low_bits..free {
                if (chunk >> (b - low_bits)) & 1 == 1 {
                    signs[b + 1] = -1.0;
                }
            }
            let mut s = vec![0.0; frame.m()];
            for (col, e) in cols.iter().zip(&signs) {
                for (sk, ck) in s.iter_mut().zip(col) {
                    *sk += e * ck;
                }
            }
            let mut acc = pow(ambient.eval(&s));
            // Gray-code walk over the low bits: step i flips bit trailing_zeros(i).
            for i in 1u64..(1 << low_bits) {
                let coord = i.trailing_zeros() as usize + 1;
                let e = signs[coord];
                for (sk, ck) in s.iter_mut().zip(&cols[coord]) {
                    *sk -= 2.0 * e * ck;
                }
                signs[coord] = -e;
                acc += pow(ambient.eval(&s));
            }
            acc
        })
        .collect();
    partial.into_iter().sum()
}

/// Monte Carlo Rademacher average. For `p > 1` the standard error of the
/// `p`-th root is propagated by the delta method.
pub fn rademacher_average_mc(frame: &Frame, x: &[f64], p: f64, mc_samples: usize, seed: u64) -> Result<NormEstimate> {
    check_len(frame.n(), x.len())?;
    check_power(p)?;
    if mc_samples < 2 {
        return Err(invalid("rademacher_average_mc needs at least 2 samples"));
    }
    let n = frame.n();
    let specs: Vec<_> = blocks(mc_samples).collect();
    let parts: Vec<Moments> = specs
        .into_par_iter()
        .map(|(b, rows)| {
            let mut rng = stream_rng(seed, b);
            let mut eps = vec![0.0; n];
            let mut scratch = vec![0.0; frame.m()];
            let mut m = Moments::default();
            for _ in 0..rows {
                for e in eps.iter_mut() {
                    *e = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                let v = frame.combination_norm(&eps, x, &mut scratch);
                m.push(if p == 1.0 { v } else { v.powf(p) });
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    if p == 1.0 {
        return Ok(NormEstimate::from_moments(&total));
    }
    let value = total.mean.powf(1.0 / p);
    let std_error = if total.mean > 0.0 {
        total.std_error() * value / (p * total.mean)
    } else {
        0.0
    };
    Ok(NormEstimate { value, std_error, samples_used: total.count })
}
