//! Oracle tests for exponential-sum evaluation, checked against closed forms
//! and an independent compensated reference evaluator written in this file.

use expsumlab::curve::Curve;
use expsumlab::decoupling::SurfacePsi;
use expsumlab::expsum::{
    eval_curve_sum, eval_grid_x1, eval_quadratic_weyl, eval_surface_sum, Coords, IntervalZ,
    Point4,
};
use num_complex::Complex64;

/// Two-float ("double-double" style) phase accumulator: keeps the fractional
/// part of a sum of products to ~1e-30 so the reference sum below is accurate
/// well beyond the tolerances we assert.
#[derive(Clone, Copy, Default)]
struct Phase {
    hi: f64,
    lo: f64,
}

impl Phase {
    fn add(mut self, x: f64) -> Self {
        // TwoSum of hi and x, drop whole periods, push error into lo.
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb);
        self.hi = s - s.round();
        self.lo += err;
        self
    }

    /// Add a product a * b with the product error split out (Dekker-style via
    /// fused multiply-add).
    fn add_prod(self, a: f64, b: f64) -> Self {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p).add(e)
    }

    fn value(self) -> f64 {
        let t = self.hi + self.lo;
        t - t.round()
    }
}

fn reference_sum(curve: &Curve, n: u64, lo: i64, hi: i64, x: Point4) -> Complex64 {
    let nf = n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in lo..=hi {
        let t = m as f64 / nf;
        let p3 = curve.eval_phi(3, 0, t).unwrap();
        let p4 = curve.eval_phi(4, 0, t).unwrap();
        let ph = Phase::default()
            .add_prod(m as f64, x.x1)
            .add_prod((m as f64) * (m as f64), x.x2)
            .add_prod(p3, x.x3)
            .add_prod(p4, x.x4)
            .value();
        let (s, c) = (std::f64::consts::TAU * ph).sin_cos();
        acc += Complex64::new(c, s);
    }
    acc
}

#[test]
fn curve_sum_at_origin_counts_terms() {
    let c = Curve::moment();
    let v = eval_curve_sum(
        &c,
        16,
        IntervalZ::new(8, 16).unwrap(),
        Point4::zero(),
        Coords::Conjecture,
    )
    .unwrap();
    assert!((v - Complex64::new(9.0, 0.0)).norm() < 1e-12);
}

#[test]
fn curve_sum_single_term_closed_form() {
    // One term n = 5 at x1 = 0.3: e(1.5) = e(1/2) = -1.
    let c = Curve::moment();
    let v = eval_curve_sum(
        &c,
        8,
        IntervalZ::new(5, 5).unwrap(),
        Point4::new(0.3, 0.0, 0.0, 0.0),
        Coords::Conjecture,
    )
    .unwrap();
    assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn curve_sum_matches_reference_evaluator() {
    let cases = [
        (Curve::moment(), 16u64, 8i64, 16i64),
        (Curve::moment(), 64, 32, 64),
        (Curve::power(1.5, 0.5), 64, 32, 64),
    ];
    let points = [
        Point4::new(0.137, 0.861, 3.25, -1.5),
        Point4::new(-0.42, 0.0009, 90.0, 17.0),
        Point4::new(0.9999, -0.731, -45.5, 2.25),
    ];
    for (curve, n, lo, hi) in &cases {
        for &x in &points {
            let got = eval_curve_sum(
                curve,
                *n,
                IntervalZ::new(*lo, *hi).unwrap(),
                x,
                Coords::Conjecture,
            )
            .unwrap();
            let want = reference_sum(curve, *n, *lo, *hi, x);
            assert!(
                (got - want).norm() < 1e-10,
                "n={n} x=({},{},{},{}): got {got}, want {want}",
                x.x1,
                x.x2,
                x.x3,
                x.x4
            );
        }
    }
}

/// Renormalized coordinates are the conjecture coordinates with x2 divided by
/// n and x3, x4 multiplied by n.
#[test]
fn renormalized_coordinates_consistent() {
    let c = Curve::moment();
    let n = 32u64;
    let i = IntervalZ::new(16, 32).unwrap();
    let x = Point4::new(0.311, 0.77, 0.023, -0.051);
    let renorm = eval_curve_sum(&c, n, i, x, Coords::Renormalized).unwrap();
    let equiv = Point4::new(
        x.x1,
        x.x2 / n as f64,
        x.x3 * n as f64,
        x.x4 * n as f64,
    );
    let conj = eval_curve_sum(&c, n, i, equiv, Coords::Conjecture).unwrap();
    assert!((renorm - conj).norm() < 1e-12);
}

#[test]
fn curve_sum_rejects_out_of_domain_terms() {
    // Custom curves carry an explicit evaluation domain; stepping outside it
    // is an error rather than silent extrapolation.
    let c = Curve::moment();
    let r = c.rescale_block(64, 32, 8).unwrap();
    // Rescaled domain is [0, 2]; n/m up to 2 is fine, beyond is not.
    assert!(eval_curve_sum(
        &r.curve,
        8,
        IntervalZ::new(9, 17).unwrap(),
        Point4::zero(),
        Coords::Conjecture
    )
    .is_err());
    // The power family is undefined at negative t.
    let p = Curve::power(1.5, 0.5);
    assert!(eval_curve_sum(
        &p,
        8,
        IntervalZ::new(-4, 4).unwrap(),
        Point4::zero(),
        Coords::Conjecture
    )
    .is_err());
}

#[test]
fn quadratic_weyl_closed_form() {
    // m = 3, u = w = 1/3, v = 0:
    //   k=1: e(2/3), k=2: e(2/3 + 4/3) = 1, k=3: e(1 + 3) = 1,
    // so the sum is 2 + e(2/3).
    let v = eval_quadratic_weyl(3, 1.0 / 3.0, 1.0 / 3.0, 0.0);
    let expect = Complex64::new(2.0, 0.0) + Complex64::from_polar(1.0, std::f64::consts::TAU * 2.0 / 3.0);
    assert!((v - expect).norm() < 1e-12, "got {v}, want {expect}");

    // At the origin the sum counts its m terms.
    let w = eval_quadratic_weyl(7, 0.0, 0.0, 0.0);
    assert!((w - Complex64::new(7.0, 0.0)).norm() < 1e-12);
}

#[test]
fn grid_x1_matches_direct_evaluation() {
    let c = Curve::moment();
    let i = IntervalZ::new(4, 8).unwrap();
    let grid = eval_grid_x1(&c, 8, i, 0.0, 0.0, 0.0, 32).unwrap();
    assert_eq!(grid.len(), 32);
    // j = 0 counts terms; j = 16 is x1 = 1/2, alternating signs sum to 1.
    assert!((grid[0] - Complex64::new(5.0, 0.0)).norm() < 1e-12);
    assert!((grid[16] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    // Full cross-check at a non-trivial slice point.
    let grid2 = eval_grid_x1(&c, 8, i, 0.37, 1.25, -0.8, 24).unwrap();
    for (j, got) in grid2.iter().enumerate() {
        let x = Point4::new(j as f64 / 24.0, 0.37, 1.25, -0.8);
        let want = eval_curve_sum(&c, 8, i, x, Coords::Conjecture).unwrap();
        assert!((got - want).norm() < 1e-10, "slot {j}: {got} vs {want}");
    }
}

#[test]
fn grid_x1_requires_alias_free_length() {
    let c = Curve::moment();
    let i = IntervalZ::new(4, 8).unwrap();
    assert!(eval_grid_x1(&c, 8, i, 0.0, 0.0, 0.0, 4).is_err());
}

#[test]
fn surface_sum_matches_direct_double_loop() {
    let n = 64u64;
    let k = 8usize; // sqrt(n)
    let psi = SurfacePsi::two_block_instance(n, &Curve::moment(), 0.5, 0.75, 1.0).unwrap();
    // Deterministic non-trivial coefficients.
    let coeffs: Vec<Complex64> = (0..k * k)
        .map(|i| {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.61).cos();
            Complex64::new(a, 0.5 * b)
        })
        .collect();
    let x = Point4::new(0.21, -0.47, 3.1, 0.9);
    let got = eval_surface_sum(&psi, k, &coeffs, x).unwrap();
    let mut want = Complex64::new(0.0, 0.0);
    for i1 in 1..=k {
        for i2 in 1..=k {
            let xi1 = i1 as f64 / k as f64;
            let xi2 = i2 as f64 / k as f64;
            let (h3, h4) = psi.heights(xi1, xi2).unwrap();
            let ph = xi1 * x.x1 + xi2 * x.x2 + h3 * x.x3 + h4 * x.x4;
            let w = Complex64::from_polar(1.0, std::f64::consts::TAU * (ph - ph.round()));
            want += coeffs[(i1 - 1) * k + (i2 - 1)] * w;
        }
    }
    assert!((got - want).norm() < 1e-10, "got {got}, want {want}");
}

#[test]
fn surface_sum_one_hot_has_unit_modulus() {
    let n = 64u64;
    let k = 8usize;
    let psi = SurfacePsi::two_block_instance(n, &Curve::moment(), 0.5, 0.75, 1.0).unwrap();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k * k];
    coeffs[19] = Complex64::new(1.0, 0.0);
    let v = eval_surface_sum(&psi, k, &coeffs, Point4::new(0.4, 0.6, -2.0, 1.1)).unwrap();
    assert!((v.norm() - 1.0).abs() < 1e-12);
}
