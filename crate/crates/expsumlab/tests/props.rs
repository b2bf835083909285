//! Property tests for structural invariants: symmetries, monotonicity, and
//! conservation laws that must hold across the whole parameter space.

use expsumlab::arcs::classify_w;
use expsumlab::curve::Curve;
use expsumlab::expsum::{eval_curve_sum, eval_quadratic_weyl, Coords, IntervalZ, Point4};
use expsumlab::levelset::{build_partition, f_level, preimage_measure};
use expsumlab::moments::tuple_count_oracle;
use expsumlab::util::e;
use proptest::prelude::*;

fn small_x() -> impl Strategy<Value = f64> {
    -4.0..4.0f64
}

proptest! {
    #[test]
    fn unit_circle_phase(theta in -1e6..1e6f64) {
        let z = e(theta);
        prop_assert!((z.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_periodicity(theta in -100.0..100.0f64) {
        let a = e(theta);
        let b = e(theta + 1.0);
        prop_assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn phase_conjugation(theta in -100.0..100.0f64) {
        let a = e(theta);
        let b = e(-theta);
        prop_assert!((a - b.conj()).norm() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Trivial bound: |E| never exceeds the number of terms.
    #[test]
    fn curve_sum_triangle_bound(
        x1 in small_x(), x2 in small_x(), x3 in small_x(), x4 in small_x(),
        lo in 8i64..16, len in 0i64..8
    ) {
        let c = Curve::moment();
        let i = IntervalZ::new(lo, lo + len).unwrap();
        let v = eval_curve_sum(&c, 16, i, Point4::new(x1, x2, x3, x4), Coords::Conjecture).unwrap();
        prop_assert!(v.norm() <= (len + 1) as f64 + 1e-9);
    }

    /// Negating the point conjugates the sum.
    #[test]
    fn curve_sum_conjugation(
        x1 in small_x(), x2 in small_x(), x3 in small_x(), x4 in small_x()
    ) {
        let c = Curve::moment();
        let i = IntervalZ::new(8, 16).unwrap();
        let plus = eval_curve_sum(&c, 16, i, Point4::new(x1, x2, x3, x4), Coords::Conjecture).unwrap();
        let minus = eval_curve_sum(&c, 16, i, Point4::new(-x1, -x2, -x3, -x4), Coords::Conjecture).unwrap();
        prop_assert!((plus - minus.conj()).norm() < 1e-9);
    }

    /// Integer shifts of x1 are invisible (the frequencies are integers).
    #[test]
    fn curve_sum_x1_periodicity(
        x1 in small_x(), x2 in small_x(), shift in 1i64..5
    ) {
        let c = Curve::moment();
        let i = IntervalZ::new(8, 16).unwrap();
        let a = eval_curve_sum(&c, 16, i, Point4::new(x1, x2, 0.3, 0.7), Coords::Conjecture).unwrap();
        let b = eval_curve_sum(&c, 16, i, Point4::new(x1 + shift as f64, x2, 0.3, 0.7), Coords::Conjecture).unwrap();
        prop_assert!((a - b).norm() < 1e-9);
    }

    /// The quadratic Weyl sum conjugates under sign flip of all arguments.
    #[test]
    fn weyl_conjugation(u in small_x(), w in small_x(), v in -0.001..0.001f64) {
        let a = eval_quadratic_weyl(12, u, w, v);
        let b = eval_quadratic_weyl(12, -u, -w, -v);
        prop_assert!((a - b.conj()).norm() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The reported arc always contains the classified point, with minimal q
    /// among all arcs that do.
    #[test]
    fn classification_is_minimal_and_containing(w in 0.0..1.0f64, m in 4u64..40) {
        let a = classify_w(w, m);
        prop_assert!(a.q >= 1 && a.q <= m);
        prop_assert!(a.b >= 1 && a.b <= a.q);
        prop_assert!(a.phi <= 1.0 / (a.q as f64 * m as f64) + 1e-12);
        for q in 1..a.q {
            let qw = q as f64 * w;
            prop_assert!((qw - qw.round()).abs() > 1.0 / m as f64 - 1e-9,
                "q = {q} also contains w = {w}");
        }
    }

    /// Condition constants move monotonically under nested grid refinement:
    /// maxima grow, minima shrink.
    #[test]
    fn condition_constants_monotone(g in 4u32..8) {
        let c = Curve::power(1.5, 0.5);
        let coarse = c.verify_conditions((1usize << g) + 1).unwrap();
        let fine = c.verify_conditions((1usize << (g + 1)) + 1).unwrap();
        prop_assert!(fine.a1 >= coarse.a1 - 1e-12);
        prop_assert!(fine.a3 >= coarse.a3 - 1e-12);
        prop_assert!(fine.a2 <= coarse.a2 + 1e-12);
        prop_assert!(fine.a4 <= coarse.a4 + 1e-12);
    }

    /// The two-point Jacobian is symmetric in (t, s): the defining row swap
    /// is an even permutation.
    #[test]
    fn jacobian_symmetry(t in 0.5..1.0f64, s in 0.5..1.0f64) {
        let c = Curve::moment();
        let a = c.jacobian_psi(t, s, 64).unwrap();
        let b = c.jacobian_psi(s, t, 64).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Power-sum systems are invariant under shifting the interval.
    #[test]
    fn tuple_count_shift_invariance(lo in 1i64..6, len in 0i64..4, shift in 0i64..5, k in 1u32..3) {
        let a = tuple_count_oracle(64, IntervalZ::new(lo, lo + len).unwrap(), k).unwrap();
        let b = tuple_count_oracle(64, IntervalZ::new(lo + shift, lo + len + shift).unwrap(), k).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Every attained level is covered by the dyadic partition.
    #[test]
    fn partition_covers_range(l1 in -512i64..512, l2 in -512i64..512, t in 0.5..1.0f64) {
        let c = Curve::moment();
        let p = build_partition(&c, l1, l2).unwrap();
        let v = f_level(&c, l1, l2, t);
        prop_assert!(p.locate(v).is_some(), "l = ({l1},{l2}), v = {v}");
    }

    /// Sublevel measures are monotone in the window width.
    #[test]
    fn preimage_monotone_in_window(l1 in 1i64..256, w in 0.1..2.0f64) {
        let c = Curve::moment();
        let v = f_level(&c, l1, 3, 0.8);
        let narrow = preimage_measure(&c, l1, 3, v, w, 20_000).unwrap();
        let wide = preimage_measure(&c, l1, 3, v, 2.0 * w, 20_000).unwrap();
        prop_assert!(wide >= narrow - 1e-12);
    }
}
