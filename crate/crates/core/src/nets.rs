//! Greedy θ-nets on the unit sphere of a (semi)norm, and covering checks.

use std::io::Write;

use rand_distr::StandardNormal;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norms::Seminorm;
use crate::seed::{blocks, stream_rng, Rng};

/// Source of points on the unit sphere of some norm.
pub trait SphereSampler: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut Rng) -> Vec<f64>;
}

/// Gaussian direction rescaled to unit `norm`. For ℓ₂ this is the uniform
/// distribution on the sphere; for other norms it is the cone measure's
/// Gaussian analogue.
pub struct RadialSampler<'a, N: Seminorm> {
    norm: &'a N,
}

impl<'a, N: Seminorm> RadialSampler<'a, N> {
    pub fn new(norm: &'a N) -> Self {
        RadialSampler { norm }
    }
}

impl<N: Seminorm> SphereSampler for RadialSampler<'_, N> {
    fn dim(&self) -> usize {
        self.norm.dim()
    }

    fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..self.norm.dim()).map(|_| rng.sample(StandardNormal)).collect();
            let r = self.norm.value(&g);
            if r > 0.0 && r.is_finite() {
                return g.into_iter().map(|v| v / r).collect();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyNetConfig {
    pub theta: f64,
    pub max_points: usize,
    /// Stop after `rejection_factor · |net|` consecutive rejections.
    pub rejection_factor: usize,
    /// Floor on the rejection streak; small nets would otherwise stop with
    /// a visibly uncovered fraction.
    pub min_streak: usize,
}

impl GreedyNetConfig {
    pub fn new(theta: f64) -> Self {
        GreedyNetConfig { theta, max_points: 100_000, rejection_factor: 50, min_streak: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub points: Vec<Vec<f64>>,
    pub theta: f64,
    /// Construction hit `max_points` before the stopping rule fired.
    pub truncated: bool,
    /// Candidates drawn in total.
    pub candidates: u64,
}

impl Net {
    pub fn from_points(points: Vec<Vec<f64>>, theta: f64) -> Self {
        Net { points, theta, truncated: false, candidates: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest pairwise distance, `+∞` for fewer than two points.
    pub fn min_separation<M: Seminorm>(&self, metric: &M) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.min(metric.distance(p, q));
            }
        }
        best
    }

    /// `min_y metric(x − y)` over net points.
    pub fn distance_to<M: Seminorm>(&self, metric: &M, x: &[f64]) -> f64 {
        self.points.iter().map(|y| metric.distance(x, y)).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# theta={} truncated={}", self.theta, self.truncated)?;
        let dim = self.points.first().map_or(0, Vec::len);
        let cols: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", cols.join(","))?;
        for p in &self.points {
            let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Greedy random packing: candidates at distance `≥ θ` from every admitted
/// point are admitted. The admitted set is `θ`-separated, and once the
/// rejection streak is long, approximately a `θ`-net.
pub fn greedy_net<M: Seminorm, S: SphereSampler>(
    metric: &M,
    sampler: &S,
    config: GreedyNetConfig,
    seed: u64,
) -> Result<Net> {
    let theta = config.theta;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0, 1), got {theta}")));
    }
    if metric.dim() != sampler.dim() {
        return Err(Error::DimensionMismatch { expected: metric.dim(), got: sampler.dim() });
    }
    let mut rng = stream_rng(seed, 0);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut streak = 0usize;
    let mut candidates = 0u64;
    loop {
        let limit = (config.rejection_factor * points.len()).max(config.min_streak);
        if streak >= limit {
            break;
        }
        if points.len() >= config.max_points {
            return Ok(Net { points, theta, truncated: true, candidates });
        }
        let x = sampler.sample(&mut rng);
        candidates += 1;
        if points.iter().all(|y| metric.distance(&x, y) >= theta) {
            points.push(x);
            streak = 0;
        } else {
            streak += 1;
        }
    }
    Ok(Net { points, theta, truncated: false, candidates })
}

/// Draws `count` sphere points with the same seeding as [`covering_check`].
pub fn sample_sphere_points<S: SphereSampler>(sampler: &S, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let specs: Vec<_> = blocks(count).collect();
    specs
        .into_par_iter()
        .map(|(b, rows)| {
            let mut rng = stream_rng(seed, b);
            (0..rows).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    /// Largest distance from a probe to its nearest net point.
    pub max_gap: f64,
    /// Fraction of probes within `θ` of the net.
    pub covered_fraction: f64,
    pub probes: usize,
}

pub fn covering_check<M: Seminorm, S: SphereSampler>(
    net: &Net,
    metric: &M,
    sampler: &S,
    probes: usize,
    seed: u64,
) -> Result<CoveringReport> {
    if net.is_empty() {
        return Err(Error::EmptyNet);
    }
    if probes == 0 {
        return Err(invalid("covering check needs at least one probe"));
    }
    let gaps: Vec<f64> = sample_sphere_points(sampler, probes, seed)
        .par_iter()
        .map(|x| net.distance_to(metric, x))
        .collect();
    let covered = gaps.iter().filter(|&&g| g <= net.theta).count();
    Ok(CoveringReport {
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        covered_fraction: covered as f64 / probes as f64,
        probes,
    })
}
