//! Randomized empirical norms over log-concave samples.
//!
//! Given unit vectors `v₁,…,vₙ` in a normed space and a log-concave
//! measure `μ` on ℝⁿ, the expectation norm
//!
//! ```text
//! |||x||| = ∫ ‖Σᵢ aᵢxᵢvᵢ‖ dμ(a)
//! ```
//!
//! is approximated by the empirical norm over `N = (1+δ)n` independent rows
//! `a(1),…,a(N) ~ μ`:
//!
//! ```text
//! |||x|||_N = (1/N) Σⱼ ‖Σᵢ a(j)ᵢxᵢvᵢ‖
//! ```
//!
//! The crate provides the measures, norms and sketches, the concentration
//! and small-ball bounds that control `|||·|||_N / |||·|||`, θ-nets, and a
//! seeded, thread-count-independent experiment harness.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod nets;
pub mod norms;
pub mod seed;
pub mod sketch;
pub mod stats;

pub use error::{Error, Result};
pub use measures::{Family, MeasureSpec, SampleBatch};
pub use norms::{NormKind, NormOracle, Seminorm};
pub use sketch::{Frame, NormEstimate, Sketch};
