//! Log-concave probability measures on ℝⁿ and their seeded samplers.
//!
//! Sampling is organised in blocks of [`BLOCK_ROWS`] rows; block `k` of a
//! batch drawn with seed `s` uses its own generator seeded with
//! `derive_seed(s, k)`. A batch is therefore bit-reproducible from
//! `(measure, count, seed)` no matter how many threads generate it.

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::seed::{blocks, stream_rng, Rng, BLOCK_ROWS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianIid,
    /// Two-sided exponential (Laplace) coordinates.
    ExponentialSymmetricIid,
    UniformCube,
    UniformEuclideanBall,
    /// Uniform on `{x : |<f_i, x>| <= 1 for all i}`, sampled by hit-and-run.
    UniformPolytope,
}

/// Hit-and-run mixing parameters. `None` means the dimension-based default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HitAndRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning: Option<usize>,
}

impl HitAndRun {
    /// Steps taken before the first retained point (default `10·n`).
    pub fn burn_in_for(&self, dim: usize) -> usize {
        self.burn_in.unwrap_or(10 * dim)
    }

    /// Steps between retained points (default `n`).
    pub fn thinning_for(&self, dim: usize) -> usize {
        self.thinning.unwrap_or(dim).max(1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMeasure {
    family: Family,
    dim: usize,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    polytope_facets: Vec<Vec<f64>>,
    #[serde(default)]
    hit_and_run: HitAndRun,
}

fn one() -> f64 {
    1.0
}

/// A validated log-concave measure. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct MeasureSpec {
    family: Family,
    dim: usize,
    scale: f64,
    facets: Vec<Vec<f64>>,
    hit_and_run: HitAndRun,
}

impl TryFrom<RawMeasure> for MeasureSpec {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let m = MeasureSpec {
            family: raw.family,
            dim: raw.dim,
            scale: raw.scale,
            facets: raw.polytope_facets,
            hit_and_run: raw.hit_and_run,
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<MeasureSpec> for RawMeasure {
    fn from(m: MeasureSpec) -> Self {
        RawMeasure {
            family: m.family,
            dim: m.dim,
            scale: m.scale,
            polytope_facets: m.facets,
            hit_and_run: m.hit_and_run,
        }
    }
}

impl MeasureSpec {
    /// Product or rotation-invariant family with unit scale. Use
    /// [`MeasureSpec::polytope`] for `UniformPolytope`.
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if family == Family::UniformPolytope {
            return Err(invalid("uniform_polytope needs facets; use MeasureSpec::polytope"));
        }
        let m = MeasureSpec { family, dim, scale: 1.0, facets: Vec::new(), hit_and_run: HitAndRun::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(Family::GaussianIid, dim)
    }

    /// Uniform measure on `{x : |<f, x>| <= 1}` for every facet normal `f`.
    pub fn polytope(facets: Vec<Vec<f64>>) -> Result<Self> {
        let dim = facets.first().map_or(0, Vec::len);
        let m = MeasureSpec {
            family: Family::UniformPolytope,
            dim,
            scale: 1.0,
            facets,
            hit_and_run: HitAndRun::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_hit_and_run(mut self, cfg: HitAndRun) -> Self {
        self.hit_and_run = cfg;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn facets(&self) -> &[Vec<f64>] {
        &self.facets
    }

    pub fn hit_and_run(&self) -> HitAndRun {
        self.hit_and_run
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("measure dimension must be positive"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid(format!("scale must be positive and finite, got {}", self.scale)));
        }
        match self.family {
            Family::UniformPolytope => {
                if self.facets.is_empty() {
                    return Err(Error::UnboundedPolytope("no facets".into()));
                }
                for f in &self.facets {
                    check_len(self.dim, f.len())?;
                    if f.iter().any(|v| !v.is_finite()) {
                        return Err(invalid("facet normals must be finite"));
                    }
                }
                let rank = matrix_rank(&self.facets, self.dim);
                if rank < self.dim {
                    return Err(Error::UnboundedPolytope(format!(
                        "facet normals span a {rank}-dimensional subspace of R^{}",
                        self.dim
                    )));
                }
            }
            _ if !self.facets.is_empty() => {
                return Err(invalid("polytope_facets only apply to uniform_polytope"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Log-density up to an additive constant. Uniform families return `0`
    /// inside the support and `-inf` outside.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x.len())?;
        let s = self.scale;
        Ok(match self.family {
            Family::GaussianIid => -x.iter().map(|v| v * v).sum::<f64>() / (2.0 * s * s),
            Family::ExponentialSymmetricIid => -x.iter().map(|v| v.abs()).sum::<f64>() / s,
            Family::UniformCube => indicator(x.iter().all(|v| v.abs() <= s)),
            Family::UniformEuclideanBall => indicator(x.iter().map(|v| v * v).sum::<f64>() <= s * s),
            Family::UniformPolytope => indicator(self.in_polytope(x, 0.0)),
        })
    }

    /// True if `x` satisfies every facet constraint `|<f, x>| <= scale` up to `tol`.
    pub fn in_polytope(&self, x: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| dot(f, x).abs() <= self.scale * (1.0 + tol))
    }

    /// Draws `count` i.i.d. points.
    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleBatch> {
        if count == 0 {
            return Err(invalid("sample count must be at least 1"));
        }
        let dim = self.dim;
        let mut points = vec![0.0; count * dim];
        points
            .par_chunks_mut(BLOCK_ROWS * dim)
            .enumerate()
            .for_each(|(b, chunk)| self.fill_block(seed, b as u64, chunk));
        Ok(SampleBatch { points, count, dim, seed, measure: self.clone() })
    }

    /// Fills `out` (a multiple of `dim` long, at most one block) with the
    /// rows of block `block` of the batch seeded by `seed`.
    pub fn fill_block(&self, seed: u64, block: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len() % self.dim, 0);
        debug_assert!(out.len() <= BLOCK_ROWS * self.dim);
        let mut rng = stream_rng(seed, block);
        match self.family {
            Family::UniformPolytope => self.hit_and_run_fill(&mut rng, out),
            _ => {
                for row in out.chunks_exact_mut(self.dim) {
                    self.draw_product(&mut rng, row);
                }
            }
        }
    }

    /// Visits every block of a `count`-row batch in parallel and returns the
    /// per-block results in block order.
    pub fn map_blocks<T, F>(&self, count: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let dim = self.dim;
        let specs: Vec<_> = blocks(count).collect();
        specs
            .into_par_iter()
            .map_init(
                || vec![0.0; BLOCK_ROWS * dim],
                |buf, (b, rows)| {
                    let slot = &mut buf[..rows * dim];
                    self.fill_block(seed, b, slot);
                    f(slot)
                },
            )
            .collect()
    }

    fn draw_product(&self, rng: &mut Rng, row: &mut [f64]) {
        let s = self.scale;
        match self.family {
            Family::GaussianIid => {
                for v in row.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *v = s * g;
                }
            }
            Family::ExponentialSymmetricIid => {
                for v in row.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *v = if rng.random::<bool>() { s * e } else { -s * e };
                }
            }
            Family::UniformCube => {
                for v in row.iter_mut() {
                    *v = s * rng.random_range(-1.0..=1.0);
                }
            }
            Family::UniformEuclideanBall => {
                let mut r2 = 0.0;
                for v in row.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    r2 += g * g;
                    *v = g;
                }
                let u: f64 = rng.random();
                let radius = s * u.powf(1.0 / self.dim as f64) / r2.sqrt();
                for v in row.iter_mut() {
                    *v *= radius;
                }
            }
            Family::UniformPolytope => unreachable!("polytope rows come from hit-and-run"),
        }
    }

    fn hit_and_run_fill(&self, rng: &mut Rng, out: &mut [f64]) {
        let dim = self.dim;
        let burn_in = self.hit_and_run.burn_in_for(dim);
        let thinning = self.hit_and_run.thinning_for(dim);
        let mut x = vec![0.0; dim];
        let mut dir = vec![0.0; dim];
        for _ in 0..burn_in {
            self.hit_and_run_step(rng, &mut x, &mut dir);
        }
        for row in out.chunks_exact_mut(dim) {
            for _ in 0..thinning {
                self.hit_and_run_step(rng, &mut x, &mut dir);
            }
            row.copy_from_slice(&x);
        }
    }

    /// One hit-and-run move: uniform point on the chord through `x` along a
    /// uniformly random direction.
    fn hit_and_run_step(&self, rng: &mut Rng, x: &mut [f64], dir: &mut [f64]) {
        let mut norm2 = 0.0;
        for d in dir.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            norm2 += g * g;
            *d = g;
        }
        if norm2 == 0.0 {
            return;
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for f in &self.facets {
            let a = dot(f, dir);
            let b = dot(f, x);
            if a.abs() < 1e-300 {
                continue;
            }
            let (l, h) = ((-self.scale - b) / a, (self.scale - b) / a);
            let (l, h) = if l <= h { (l, h) } else { (h, l) };
            lo = lo.max(l);
            hi = hi.min(h);
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return;
        }
        let lambda = rng.random_range(lo..=hi);
        for (xi, di) in x.iter_mut().zip(dir.iter()) {
            *xi += lambda * di;
        }
    }
}

fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::NEG_INFINITY
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank by Gaussian elimination with partial pivoting.
fn matrix_rank(rows: &[Vec<f64>], dim: usize) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * 1e-10 * (rows.len().max(dim) as f64);
    let mut rank = 0;
    for col in 0..dim {
        let pivot = (rank..m.len()).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()));
        let Some(p) = pivot else { break };
        if m[p][col].abs() <= tol {
            continue;
        }
        m.swap(rank, p);
        let (head, tail) = m.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        for row in tail {
            let factor = row[col] / pivot_row[col];
            for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= factor * pv;
            }
        }
        rank += 1;
    }
    rank
}

/// `count` rows of `dim` coordinates drawn from `measure`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    points: Vec<f64>,
    count: usize,
    dim: usize,
    seed: u64,
    measure: MeasureSpec,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    /// Row-major `count × dim` matrix.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }
}
