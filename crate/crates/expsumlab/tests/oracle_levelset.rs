//! Oracle tests for the level-set module: dyadic partitions of the range of
//! f = l1 phi3'' + l2 phi4'', sublevel-set measures, the measure-vs-scale
//! product bound, and the pair-counting harness.

use expsumlab::curve::Curve;
use expsumlab::levelset::{
    build_partition, count_pairs, f_level, preimage_measure, verify_lemma42, CaseTag, SystemTag,
};

/// l1 = 1024, l2 = 0 on the moment curve: f = 1024 * 6t = 6144 t, so
/// f' = 6144 >= 2^10 / 8 everywhere and the partition is the single
/// full-range set at scale j = 10.
#[test]
fn partition_linear_case() {
    let c = Curve::moment();
    let p = build_partition(&c, 1024, 0).unwrap();
    assert_eq!(p.j, 10);
    assert_eq!(p.case, CaseTag::Steep);
    assert_eq!(p.sets.len(), 1);
    assert_eq!(p.sets[0].s, 10);
    // f(t0) is somewhere in the range [3072, 6144].
    assert!(p.f_t0 >= 3072.0 && p.f_t0 <= 6144.0);
}

/// l1 = -2048, l2 = 1024: f = -12288 t + 12288 t^2 has a critical point at
/// t0 = 1/2 (the left endpoint) with f'(t0) = 0, forcing the ball-and-annuli
/// decomposition: j = 11, ball radius 8 = 2^3, annuli up to s = 11.
#[test]
fn partition_critical_case() {
    let c = Curve::moment();
    let p = build_partition(&c, -2048, 1024).unwrap();
    assert_eq!(p.j, 11);
    assert_eq!(p.case, CaseTag::Critical);
    assert!((p.t0 - 0.5).abs() < 1e-6);
    assert!(p.fp_t0.abs() < 1e-3);
    assert!((p.f_t0 - (-3072.0)).abs() < 1e-6);
    // Ball at scale 3 plus annuli 4..=11.
    assert_eq!(p.sets[0].s, 3);
    assert!(p.sets[0].ball);
    assert_eq!(p.sets.len(), 1 + (11 - 3));
    for (k, set) in p.sets.iter().enumerate().skip(1) {
        assert_eq!(set.s, 3 + k as u32);
        assert!(!set.ball);
        assert_eq!(set.intervals.len(), 2);
    }
    // The partition covers the range: every attained value lands somewhere.
    for i in 0..=100 {
        let t = 0.5 + 0.5 * i as f64 / 100.0;
        let v = f_level(&c, -2048, 1024, t);
        assert!(p.locate(v).is_some(), "uncovered value {v} at t = {t}");
    }
}

#[test]
fn partition_zero_pair_is_flat() {
    let p = build_partition(&Curve::moment(), 0, 0).unwrap();
    assert_eq!(p.j, 0);
    assert_eq!(p.case, CaseTag::Flat);
    assert!(p.locate(0.0).is_some());
}

/// Sub-level measure of a linear f: the window [v - 1, v + 1] pulls back to
/// an interval of length 2 / 6144, well inside [1/2, 1] for v = f(3/4).
#[test]
fn preimage_measure_linear_closed_form() {
    let c = Curve::moment();
    let v = f_level(&c, 1024, 0, 0.75);
    let m = preimage_measure(&c, 1024, 0, v, 1.0, 100_000).unwrap();
    let expect = 2.0 / 6144.0;
    assert!(
        (m - expect).abs() < 1e-5,
        "measure = {m}, closed form {expect}"
    );
    // Grid resolution guard: the documented minimum is enforced.
    assert!(preimage_measure(&c, 1024, 0, v, 1.0, 100).is_err());
}

#[test]
fn preimage_measure_empty_window() {
    let c = Curve::moment();
    // Values far outside the range of f pull back to nothing.
    let m = preimage_measure(&c, 1024, 0, 1e9, 1.0, 100_000).unwrap();
    assert_eq!(m, 0.0);
}

/// The product measure * sqrt(2^(j+s)) stays under the documented cap for
/// random (l1, l2) pairs and sampled levels, on both curve families.
#[test]
fn lemma42_products_bounded_small_run() {
    for curve in [Curve::moment(), Curve::power(1.5, 0.5)] {
        let r = verify_lemma42(&curve, 30, 8, 0xfeed).unwrap();
        assert!(
            r.max_product <= 32.0,
            "max product {} at (l1, l2, s, v) = {:?}",
            r.max_product,
            r.worst
        );
        // Sanity: the statistic is non-vacuous.
        assert!(r.max_product > 0.05);
        assert!(r.trials == 30);
    }
}

/// Degenerate counting system: l1 = l2 = 0 puts every pair in one cell, so
/// the histogram is a single cell holding (number of h values)^2.
#[test]
fn count_pairs_flat_system() {
    let c = Curve::moment();
    let r = count_pairs(&c, 4096, 64, SystemTag::TwoParameter, 0.0, 0, 0, 1.0).unwrap();
    let h_count = 4096 / 64;
    assert_eq!(r.max_count, (h_count * h_count) as u64);
    assert_eq!(r.total_pairs, (h_count * h_count) as u64);
    assert_eq!(r.occupied_cells, 1);
}

/// Half-range system with a pure phi3'' tilt: the per-cell count stays under
/// the counting bound C (N / (step 2^j))^2 with C = 8.
#[test]
fn count_pairs_half_range_bound() {
    let c = Curve::moment();
    let r = count_pairs(&c, 4096, 64, SystemTag::HalfRange, 0.0, 8, 1, 1.0).unwrap();
    assert_eq!(r.j, 3);
    let bound = 8.0 * (4096.0f64 / (64.0 * 8.0)).powi(2);
    assert!(
        (r.max_count as f64) <= bound,
        "max {} vs bound {bound}",
        r.max_count
    );
    assert!(r.max_count >= 1);
    // The report carries the same bound.
    assert!((r.cell_bound - bound).abs() < 1e-9);
}

/// Single-tilt system (the l * phi3'' / 2 form): same shape of bound.
#[test]
fn count_pairs_single_tilt_bound() {
    let c = Curve::moment();
    let r = count_pairs(&c, 4096, 64, SystemTag::SingleTilt, 0.0, 16, 0, 1.0).unwrap();
    assert_eq!(r.j, 4);
    let bound = 8.0 * (4096.0f64 / (64.0 * 16.0)).powi(2);
    assert!(
        (r.max_count as f64) <= bound,
        "max {} vs bound {bound}",
        r.max_count
    );
}

/// Full-range system with annulus refinement: occupied cells are weighted by
/// the annuli their coordinates fall in; the refined bound
/// C (N/step)^2 2^(-j) 2^(-(s1+s2)/2) holds cell by cell with C = 8.
#[test]
fn count_pairs_full_range_annulus_bound() {
    let c = Curve::moment();
    let r = count_pairs(&c, 4096, 32, SystemTag::TwoParameter, 0.0, -64, 32, 1.0).unwrap();
    assert_eq!(r.j, 6);
    assert!(
        r.max_refined_ratio <= 8.0,
        "refined ratio {}",
        r.max_refined_ratio
    );
    assert!(r.max_refined_ratio > 0.0);
}
