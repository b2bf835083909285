//! Oracle tests for windowed local moments of the quadratic Weyl sum and the
//! dyadic block-sum inequality over the frequency classes.

use expsumlab::localmoment::{lemma76_check, local_moment, local_moment_table};

/// The zero class holds the near-origin mass: integrating |G|^6 over
/// u in [0, 1/(16 m)], w in [0, 1/(16 m^2)] keeps every phase within 1/8,
/// so |G| >= m cos(pi/4) there and
///   I_0 >= (1/(16 m)) (1/(16 m^2)) (m cos(pi/4))^6.
#[test]
fn zero_class_constructive_floor() {
    for m in [16u64, 32] {
        let mf = m as f64;
        let i0 = local_moment(m, 0, 0.5).unwrap();
        let floor =
            1.0 / (16.0 * mf) * (1.0 / (16.0 * mf * mf)) * (mf * 0.5f64.sqrt()).powi(6);
        assert!(i0 >= floor, "m = {m}: I_0 = {i0} < floor {floor}");
    }
}

#[test]
fn table_matches_single_queries() {
    let m = 16u64;
    let t = local_moment_table(m, 0.5).unwrap();
    assert_eq!(t.values.len(), (m * m) as usize);
    for a in [0i64, 1, 7, 128, 255] {
        let single = local_moment(m, a, 0.5).unwrap();
        let tab = t.values[a as usize];
        assert!(
            ((single - tab) / single).abs() < 1e-12,
            "a = {a}: {single} vs {tab}"
        );
    }
}

/// Conjugation symmetry of the Weyl sum reflects the class index:
/// I_a = I_(m^2 - a).
#[test]
fn class_reflection_symmetry() {
    let m = 16u64;
    let t = local_moment_table(m, 0.5).unwrap();
    let mm = (m * m) as usize;
    for a in 1..mm {
        let (x, y) = (t.values[a], t.values[mm - a]);
        assert!(
            ((x - y) / x).abs() < 1e-10,
            "a = {a}: {x} vs {y}"
        );
    }
}

#[test]
fn classes_are_positive() {
    let t = local_moment_table(16, 0.5).unwrap();
    for (a, v) in t.values.iter().enumerate() {
        assert!(*v > 0.0, "I_{a} = {v}");
    }
}

/// With unit window density (c = 1) the m^2 windows tile the full w-period,
/// so the classes sum to the sixth-moment count of the m-term quadratic sum:
/// the number of ordered 6-tuples in [1, m] with matching first and second
/// power sums.
#[test]
fn classes_tile_to_sixth_moment() {
    let m = 16u64;
    let t = local_moment_table(m, 1.0).unwrap();
    let total: f64 = t.values.iter().sum();
    // Independent count via a hash over (sum, sum of squares) of triples.
    use std::collections::HashMap;
    let mut h: HashMap<(u64, u64), u64> = HashMap::new();
    for a in 1..=m {
        for b in 1..=m {
            for c in 1..=m {
                *h.entry((a + b + c, a * a + b * b + c * c)).or_insert(0) += 1;
            }
        }
    }
    let count: u64 = h.values().map(|v| v * v).sum();
    assert!(
        ((total - count as f64) / count as f64).abs() < 1e-9,
        "sum of classes {total} vs tuple count {count}"
    );
}

/// The dyadic block inequality: grouping the classes into 2^j blocks, the
/// cubes of the block l^(2/3) sums stay under
/// 20 (log2 m)^3 (m^4 2^(2j) + m^6) at every scale.
#[test]
fn block_inequality_small_sizes() {
    for (m, c) in [(16u64, 0.5f64), (16, 1.0), (32, 1.0)] {
        let r = lemma76_check(m, c).unwrap();
        assert!(!r.rows.is_empty());
        for row in &r.rows {
            assert!(
                row.normalized <= 1.0,
                "m = {m}, c = {c}, j = {j}: lhs {lhs} exceeds allowance (normalized {nn})",
                j = row.j,
                lhs = row.lhs,
                nn = row.normalized
            );
        }
        assert!(r.max_normalized <= 1.0);
        // Non-vacuous: the top block carries real mass.
        assert!(r.max_normalized > 1e-4);
    }
}
