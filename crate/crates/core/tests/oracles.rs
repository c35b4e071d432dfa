//! Numerical values checked against oracles computed here, independently of
//! the library: quadrature, bisection, enumeration and direct simulation.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use kksketch::bounds::{
    bernstein_tail, borell_tail, c4_constant, chernoff_rate, chernoff_tail_bounds, empirical_gamma_x, latala_check,
    small_ball_estimate, ChernoffParams, PsiOneParams,
};
use kksketch::nets::{greedy_net, GreedyNetConfig, RadialSampler};
use kksketch::sketch::{expectation_norm_mc, rademacher_average_exact, rademacher_average_mc, MEAN_ABS_GAUSSIAN};
use kksketch::{Family, Frame, MeasureSpec, NormOracle, Seminorm};

/// Composite Simpson rule with `2k` panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let m = 2 * k;
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn phi(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

fn mean_abs_gaussian() -> f64 {
    simpson(|x| 2.0 * x * phi(x), 0.0, 40.0, 200_000)
}

/// `P(|g| ≤ q)`.
fn abs_gaussian_cdf(q: f64) -> f64 {
    simpson(|x| 2.0 * phi(x), 0.0, q, 20_000)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn mean_abs_gaussian_constant_matches_quadrature() {
    assert!((mean_abs_gaussian() - MEAN_ABS_GAUSSIAN).abs() < 1e-12);
}

#[test]
fn mean_abs_laplace_is_one_by_quadrature_and_sampling() {
    let quad = simpson(|x| x * (-x).exp(), 0.0, 60.0, 200_000);
    assert!((quad - 1.0).abs() < 1e-12);

    let laplace = MeasureSpec::new(Family::ExponentialSymmetricIid, 2).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(2));
    let est = expectation_norm_mc(&laplace, &frame, &[1.0, 1.0], 400_000, 3).unwrap();
    assert!((est.value - 2.0 * quad).abs() < 5.0 * est.std_error, "{est:?}");
}

#[test]
fn expectation_norm_at_e1_matches_quadrature() {
    let n = 5;
    let measure = MeasureSpec::gaussian(n).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(n));
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let est = expectation_norm_mc(&measure, &frame, &e1, 1_000_000, 17).unwrap();
    assert!((est.value - mean_abs_gaussian()).abs() < 0.003, "{est:?}");
}

#[test]
fn gaussian_pair_in_l1() {
    let measure = MeasureSpec::gaussian(2).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(2));
    let est = expectation_norm_mc(&measure, &frame, &[1.0, 1.0], 200_000, 5).unwrap();
    let truth = 2.0 * mean_abs_gaussian();
    assert!((truth - 1.5958).abs() < 1e-4);
    assert!((est.value - truth).abs() < 5.0 * est.std_error);
}

#[test]
fn small_ball_constants_by_quadrature() {
    let tail_integral = simpson(|t| 2f64.powf(-(t + 1.0) / 2.0), 1.0, 200.0, 200_000);
    assert!((tail_integral - 1.0 / LN_2).abs() < 1e-10);
    let c = c4_constant();
    let c4 = (2.0 / 3.0) * tail_integral;
    assert!((c.c4 - c4).abs() < 1e-10);
    assert!((c.c4 - 0.96179).abs() < 1e-5);
    assert!((c.gamma - 1.0 / (1.0 + c4)).abs() < 1e-10);
    assert!((c.gamma - 0.50974).abs() < 1e-5);
}

#[test]
fn gamma_x_at_normalized_e1_is_the_abs_gaussian_quantile() {
    let q = bisect(|t| abs_gaussian_cdf(t) - 2.0 / 3.0, 0.0, 5.0);
    assert!((q - 0.9674).abs() < 1e-4);
    let n = 3;
    let measure = MeasureSpec::gaussian(n).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(n));
    let x = [1.0 / MEAN_ABS_GAUSSIAN, 0.0, 0.0];
    let g = empirical_gamma_x(&measure, &frame, &x, 200_000, 11).unwrap();
    assert!((g - q / MEAN_ABS_GAUSSIAN).abs() < 0.01, "{g} vs {}", q / MEAN_ABS_GAUSSIAN);
    assert!((q / MEAN_ABS_GAUSSIAN - 1.2124).abs() < 1e-3);
}

#[test]
fn small_ball_level_gamma_keeps_a_third_outside() {
    let n = 3;
    let measure = MeasureSpec::gaussian(n).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(n));
    let x = [1.0 / MEAN_ABS_GAUSSIAN, 0.0, 0.0];
    let est = small_ball_estimate(&measure, &frame, &x, c4_constant().gamma, 100_000, 2).unwrap();
    assert!(est.probability >= 1.0 / 3.0 - 5.0 * est.std_error);
}

#[test]
fn chernoff_rate_high_precision_value() {
    let direct = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
    assert!((direct - 0.14384).abs() < 1e-5);
    assert!((chernoff_rate(0.5, 0.25).unwrap() - direct).abs() < 1e-15);
    assert!((chernoff_rate(0.0, 0.5).unwrap() - LN_2).abs() < 1e-15);
    assert!((chernoff_rate(1e-12, 0.5).unwrap() - LN_2).abs() < 1e-10);
}

#[test]
fn chernoff_bounds_against_bernoulli_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let binom = Binomial::new(100, 0.5).unwrap();
    let reps = 100_000;
    let freq = |beta: f64, rng: &mut ChaCha8Rng| {
        (0..reps).filter(|_| binom.sample(rng) as f64 >= beta * 100.0).count() as f64 / reps as f64
    };
    let below = chernoff_tail_bounds(ChernoffParams::new(0.25, 0.5, 100).unwrap());
    assert!(freq(0.25, &mut rng) >= below.lower_success_prob_bound);
    let above = chernoff_tail_bounds(ChernoffParams::new(0.75, 0.5, 100).unwrap());
    assert!(freq(0.75, &mut rng) <= above.upper_tail_bound);
}

#[test]
fn bernstein_direct_values() {
    let params = PsiOneParams::new(1.0, 1.0).unwrap();
    let linear = bernstein_tail(2.0, params, 10).unwrap();
    assert!((linear / (2.0 * (-20f64).exp()) - 1.0).abs() < 1e-12);
    let quadratic = bernstein_tail(0.5, params, 10).unwrap();
    assert!((quadratic / (2.0 * (-2.5f64).exp()) - 1.0).abs() < 1e-12);
}

#[test]
fn borell_tail_direct_values() {
    assert!((borell_tail(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((borell_tail(3.0).unwrap() - (2.0 / 3.0) * 0.25).abs() < 1e-15);
}

#[test]
fn borell_complement_on_the_cube() {
    // Uniform cube in R⁵ with ℓ∞ gauge: μ(sA) = s⁵ for the cube sA, so the
    // 2/3 level is s = (2/3)^{1/5}; tA covers the cube once t·s ≥ 1.
    let n = 5;
    let cube = MeasureSpec::new(Family::UniformCube, n).unwrap();
    let sample = cube.sample(100_000, 4).unwrap();
    let s = (2.0f64 / 3.0).powf(1.0 / n as f64);
    let linf = NormOracle::linf(n);
    for t in [1.5, 2.0, 3.0] {
        let outside = sample.rows().filter(|a| linf.value(a) > t * s).count() as f64 / 1e5;
        assert!(outside <= borell_tail(t).unwrap());
    }
}

#[test]
fn latala_interval_ratio_is_one() {
    let cube = MeasureSpec::new(Family::UniformCube, 1).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(1));
    let ts: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let r = latala_check(&cube, &frame, &[1.0], 0.5, &ts, 200_000, 3).unwrap();
    assert!((r.measure_of_set - 0.5).abs() < 0.01);
    for (t, ratio) in r.ratios {
        let sd = ((1.0 - t) / (t * 100_000.0)).sqrt();
        assert!((ratio - 1.0).abs() < 5.0 * sd, "t={t}: {ratio}");
    }
}

#[test]
fn latala_ratio_bounded_for_gaussian_l1() {
    let n = 10;
    let measure = MeasureSpec::gaussian(n).unwrap();
    let frame = Frame::standard_basis(NormOracle::l1(n));
    let ts: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let level = 0.8 * MEAN_ABS_GAUSSIAN * l1;
        let r = latala_check(&measure, &frame, &x, level, &ts, 20_000, k).unwrap();
        assert!(r.max_ratio < 10.0, "{r:?}");
    }
}

/// Direct loop over all `2ⁿ` sign patterns.
fn brute_rademacher(frame: &Frame, x: &[f64], p: f64) -> f64 {
    let n = frame.n();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let signs: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let a: Vec<f64> = signs.iter().zip(x).map(|(s, xi)| s * xi).collect();
        let mut v = vec![0.0; frame.m()];
        for (ai, col) in a.iter().zip(frame.vectors()) {
            for (vk, ck) in v.iter_mut().zip(col) {
                *vk += ai * ck;
            }
        }
        total += frame.ambient().value(&v).powf(p);
    }
    (total / (1u64 << n) as f64).powf(1.0 / p)
}

#[test]
fn rademacher_exact_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..20u64 {
        let n = 2 + (k as usize % 10);
        let m = 1 + (k as usize % 4);
        let frame = Frame::random(n, NormOracle::lp(1.0 + (k % 3) as f64, m).unwrap(), 50 + k).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for p in [1.0, 2.0, 3.5] {
            let want = brute_rademacher(&frame, &x, p);
            let got = rademacher_average_exact(&frame, &x, p).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.max(1.0), "n={n} p={p}: {got} vs {want}");
        }
    }
}

#[test]
fn repeated_vector_enumeration() {
    let v = vec![vec![0.6, 0.8], vec![0.6, 0.8]];
    let frame = Frame::new(v, NormOracle::l2(2)).unwrap();
    assert!((rademacher_average_exact(&frame, &[1.0, 1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn rademacher_mc_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..50u64 {
        let frame = Frame::random(8, NormOracle::l2(5), 100 + k).unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let exact = rademacher_average_exact(&frame, &x, 1.0).unwrap();
        let mc = rademacher_average_mc(&frame, &x, 1.0, 20_000, k).unwrap();
        assert!((mc.value - exact).abs() < 5.0 * mc.std_error, "{mc:?} vs {exact}");
    }
}

#[test]
fn net_size_within_volume_bound() {
    let l2 = NormOracle::l2(3);
    let net = greedy_net(&l2, &RadialSampler::new(&l2), GreedyNetConfig::new(0.5), 77).unwrap();
    assert!(net.len() <= 125);
    assert!(net.min_separation(&l2) >= 0.5);
}
