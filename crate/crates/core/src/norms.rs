//! Norm oracles on ℝᵐ: ℓ_p, weighted ℓ_p and symmetric-polytope gauges.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{check_len, invalid, Result};
use crate::measures::dot;

/// An ℓ_p exponent in `[1, ∞]`. Serialized as a number, or `"inf"` for ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "∞" => Ok(Exponent::INF),
                    other => other.parse().map(Exponent).map_err(E::custom),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Lp { p: Exponent },
    WeightedLp { p: Exponent, weights: Vec<f64> },
    /// `max_i |<f_i, x>|`.
    PolytopeGauge { facets: Vec<Vec<f64>> },
}

/// A norm on ℝ^dim. Immutable and cheap to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormOracle {
    #[serde(flatten)]
    kind: NormKind,
    dim: usize,
}

impl NormOracle {
    pub fn new(kind: NormKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("norm dimension must be positive"));
        }
        let check_p = |p: Exponent| {
            if p.0.is_nan() || p.0 < 1.0 {
                Err(invalid(format!("l_p needs p >= 1, got {}", p.0)))
            } else {
                Ok(())
            }
        };
        match &kind {
            NormKind::Lp { p } => check_p(*p)?,
            NormKind::WeightedLp { p, weights } => {
                check_p(*p)?;
                check_len(dim, weights.len())?;
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(invalid("weights must be positive and finite"));
                }
            }
            NormKind::PolytopeGauge { facets } => {
                if facets.is_empty() {
                    return Err(invalid("polytope gauge needs at least one facet"));
                }
                for f in facets {
                    check_len(dim, f.len())?;
                }
                // Definiteness needs the facets to span; reuse the measure check.
                crate::measures::MeasureSpec::polytope(facets.clone())
                    .map_err(|e| invalid(format!("polytope gauge is not a norm: {e}")))?;
            }
        }
        Ok(NormOracle { kind, dim })
    }

    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        Self::new(NormKind::Lp { p: Exponent(p) }, dim)
    }

    pub fn l1(dim: usize) -> Self {
        Self::lp(1.0, dim).expect("l1 is valid for dim >= 1")
    }

    pub fn l2(dim: usize) -> Self {
        Self::lp(2.0, dim).expect("l2 is valid for dim >= 1")
    }

    pub fn linf(dim: usize) -> Self {
        Self::lp(f64::INFINITY, dim).expect("l_inf is valid for dim >= 1")
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True for the plain ℓ₁ norm.
    pub fn is_l1(&self) -> bool {
        matches!(self.kind, NormKind::Lp { p } if p.0 == 1.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x.len())?;
        Ok(self.eval(x))
    }

    /// Unchecked evaluation for hot loops; `x.len()` must equal `dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            NormKind::Lp { p } => lp_norm(x.iter().map(|v| v.abs()), p.0),
            NormKind::WeightedLp { p, weights } => {
                lp_weighted(x, weights, p.0)
            }
            NormKind::PolytopeGauge { facets } => {
                facets.iter().fold(0.0, |m, f| m.max(dot(f, x).abs()))
            }
        }
    }
}

impl<'de> Deserialize<'de> for NormOracle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(flatten)]
            kind: NormKind,
            dim: usize,
        }
        let raw = Raw::deserialize(d)?;
        NormOracle::new(raw.kind, raw.dim).map_err(de::Error::custom)
    }
}

fn lp_norm<I>(abs: I, p: f64) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    if p == 1.0 {
        return abs.sum();
    }
    let m = abs.clone().fold(0.0, f64::max);
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    if p == 2.0 {
        return m * abs.map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * abs.map(|v| (v / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn lp_weighted(x: &[f64], w: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().zip(w).fold(0.0, |m, (v, w)| m.max(w * v.abs()));
    }
    // (Σ w|x|^p)^{1/p} = ℓ_p norm of (w^{1/p}|x|).
    let inv = 1.0 / p;
    lp_norm(x.iter().zip(w).map(move |(v, w)| w.powf(inv) * v.abs()), p)
}

/// Anything that evaluates a (semi)norm on ℝ^dim: ambient norms, empirical
/// norms of a fixed sketch, closed-form expectation norms.
pub trait Seminorm: Sync {
    fn dim(&self) -> usize;
    /// Value at `x`; `x.len()` must equal [`Seminorm::dim`].
    fn value(&self, x: &[f64]) -> f64;

    /// `value(x - y)`.
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.value(&diff)
    }
}

impl Seminorm for NormOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

/// Standard basis vector `e_i` in ℝ^dim.
pub fn basis(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}
