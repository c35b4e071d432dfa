use std::sync::Arc;

use proptest::prelude::*;

use kksketch::bounds::{analyse_factorization, chernoff_rate, entropy_u, psi1_norm_estimate, ChernoffParams};
use kksketch::experiments::{oversampled_rows, parameter_plan, PlanConstants};
use kksketch::stats::quantile;
use kksketch::{Frame, MeasureSpec, NormOracle, Seminorm, Sketch};

fn vec_pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-10.0..10.0f64, n), prop::collection::vec(-10.0..10.0f64, n))
}

fn scaled(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

fn sum(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lp_is_a_norm(p in 1.0..8.0f64, (x, y) in vec_pair(6), s in -5.0..5.0f64) {
        let norm = NormOracle::lp(p, 6).unwrap();
        let (nx, ny) = (norm.value(&x), norm.value(&y));
        prop_assert!(nx >= 0.0);
        prop_assert!(norm.value(&sum(&x, &y)) <= nx + ny + 1e-12 * (nx + ny));
        prop_assert!((norm.value(&scaled(&x, s)) - s.abs() * nx).abs() <= 1e-12 * (1.0 + s.abs() * nx));
    }

    #[test]
    fn lp_decreases_in_p(p in 1.0..8.0f64, q in 1.0..8.0f64, (x, _) in vec_pair(5)) {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let a = NormOracle::lp(lo, 5).unwrap().value(&x);
        let b = NormOracle::lp(hi, 5).unwrap().value(&x);
        let inf = NormOracle::linf(5).value(&x);
        prop_assert!(b <= a * (1.0 + 1e-12));
        prop_assert!(inf <= b * (1.0 + 1e-12));
    }

    #[test]
    fn empirical_norm_is_a_seminorm(seed in any::<u64>(), (x, y) in vec_pair(4), s in -5.0..5.0f64) {
        let frame = Arc::new(Frame::random(4, NormOracle::l2(3), seed ^ 1).unwrap());
        let measure = MeasureSpec::gaussian(4).unwrap();
        let sk = Sketch::from_measure(&measure, frame, 12, seed).unwrap();
        let (nx, ny) = (sk.value(&x), sk.value(&y));
        prop_assert!(nx >= 0.0);
        prop_assert!(sk.value(&sum(&x, &y)) <= nx + ny + 1e-12 * (1.0 + nx + ny));
        prop_assert!((sk.value(&scaled(&x, s)) - s.abs() * nx).abs() <= 1e-12 * (1.0 + s.abs() * nx));
        prop_assert!((sk.eval_rows(&x) - nx).abs() <= 1e-12 * (1.0 + nx));
    }

    #[test]
    fn separable_shortcut_matches_row_evaluation(seed in any::<u64>(), (x, _) in vec_pair(7)) {
        let frame = Arc::new(Frame::standard_basis(NormOracle::l1(7)));
        let sk = Sketch::from_measure(&MeasureSpec::gaussian(7).unwrap(), frame, 20, seed).unwrap();
        let a = sk.empirical_norm(&x).unwrap();
        prop_assert!((a - sk.eval_rows(&x)).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn chernoff_rate_nonnegative_and_convex(b1 in 0.0..1.0f64, b2 in 0.0..1.0f64, p in 0.01..0.99f64, l in 0.0..1.0f64) {
        let i1 = chernoff_rate(b1, p).unwrap();
        let i2 = chernoff_rate(b2, p).unwrap();
        let mid = chernoff_rate(l * b1 + (1.0 - l) * b2, p).unwrap();
        prop_assert!(i1 >= 0.0 && i2 >= 0.0);
        prop_assert!(mid <= l * i1 + (1.0 - l) * i2 + 1e-12);
        prop_assert!(chernoff_rate(p, p).unwrap() <= 1e-15);
    }

    #[test]
    fn entropy_range(beta in 0.0..=1.0f64) {
        let u = entropy_u(beta).unwrap();
        prop_assert!((-std::f64::consts::LN_2 - 1e-15..=0.0).contains(&u));
    }

    #[test]
    fn factorization_matches_direct(beta in 0.001..0.999f64, p in 0.001..0.999f64, n in 1u64..5000) {
        let f = analyse_factorization(ChernoffParams::new(beta, p, n).unwrap());
        let direct = -(n as f64) * chernoff_rate(beta, p).unwrap();
        prop_assert!((f.log_exact - direct).exp_m1().abs() < 1e-10);
        prop_assert!(f.log_upper >= f.log_exact);
    }

    #[test]
    fn plan_algebra(delta in 0.01..5.0f64, n in 1usize..500) {
        let plan = parameter_plan(delta, n, PlanConstants::default()).unwrap();
        prop_assert!(plan.rows as f64 >= (1.0 + delta) * n as f64 - 1e-9);
        prop_assert!((plan.rows as f64) < (1.0 + delta) * n as f64 + 1.0);
        prop_assert_eq!(plan.rows, oversampled_rows(delta, n));
        prop_assert!(plan.beta > 0.0 && plan.beta < 0.5);
        let full = plan.beta * plan.t_latala * plan.gamma;
        prop_assert!((plan.c_lower_chain - full / 2.0).abs() <= 1e-12 * full);
        prop_assert!(plan.theta >= 0.0 && plan.theta < 1.0);
        prop_assert!(plan.log_failure_bound.is_finite());
        let expected = usize::from(delta >= 1.0) + usize::from(plan.t_latala == 0.0);
        prop_assert_eq!(plan.warnings.len(), expected);
    }

    #[test]
    fn quantile_monotone(values in prop::collection::vec(-100.0..100.0f64, 1..200), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&values, lo) <= quantile(&values, hi));
    }

    #[test]
    fn psi1_estimate_homogeneous(values in prop::collection::vec(-50.0..50.0f64, 100..300), s in 0.01..100.0f64) {
        prop_assume!(values.iter().any(|v| *v != 0.0));
        let a = psi1_norm_estimate(&values).unwrap();
        let b = psi1_norm_estimate(&scaled(&values, s)).unwrap();
        prop_assert!((b - s * a).abs() <= 1e-10 * s * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), count in 1usize..10_000) {
        let m = MeasureSpec::gaussian(3).unwrap();
        let a = m.sample(count, seed).unwrap();
        let b = m.sample(count, seed).unwrap();
        prop_assert_eq!(a.points(), b.points());
    }
}
