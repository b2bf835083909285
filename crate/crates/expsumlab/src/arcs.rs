//! Circle-method machinery for the smoothed quadratic Weyl sum
//!   G(u, w, v) = sum over k of gamma(k/m) e(k u + k^2 w + k^3 v),
//! with gamma a fixed compactly supported bump: Farey-arc classification of
//! the quadratic coordinate, quadratic Gauss sums, the dual oscillatory
//! integral, the Poisson-summation decomposition G = sum of S(b, mm, q) J(mm),
//! and a seeded statistical verification of the square-root arc bound.

use crate::error::{Error, Result};
use crate::util::{e, KahanC};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// gamma(y) = exp(1 - 1/(1 - (y/2)^2)) inside (-2, 2) and zero outside:
/// even, smooth, equal to one at the origin.
pub struct SmoothCutoff;

impl SmoothCutoff {
    pub fn eval(y: f64) -> f64 {
        let h = y / 2.0;
        let d = 1.0 - h * h;
        if d <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / d).exp()
        }
    }

    /// Total mass of gamma, computed once by adaptive quadrature well below
    /// the tolerances any caller asserts.
    pub fn integral() -> f64 {
        static MASS: OnceLock<f64> = OnceLock::new();
        *MASS.get_or_init(|| {
            let f = |y: f64| Complex64::new(SmoothCutoff::eval(y), 0.0);
            let mut acc = KahanC::new();
            // Pre-split so the flat-into-zero edges are resolved separately.
            for p in 0..64 {
                let a = -2.0 + 4.0 * p as f64 / 64.0;
                let b = -2.0 + 4.0 * (p + 1) as f64 / 64.0;
                acc.add(adaptive_simpson(&f, a, b, 1e-15, 40));
            }
            acc.value().re
        })
    }
}

/// The Farey-arc classification of a quadratic coordinate w at scale m.
#[derive(Debug, Clone, Copy)]
pub struct ArcClass {
    /// Minimal denominator q <= m with dist(q w, Z) <= 1/m.
    pub q: u64,
    /// Numerator in [1, q] (coprime to q at the minimal denominator).
    pub b: u64,
    /// |w - b/q| measured on the circle.
    pub phi: f64,
    /// Arc membership: phi <= 1/(q m) up to roundoff. The minimal-q arc
    /// always contains its point; the flag survives serialization so
    /// boundary roundoff is visible to consumers.
    pub major_arc: bool,
    /// m^eps q^(-1/2) min(m, phi^(-1/2)): the square-root arc bound.
    pub bound: f64,
}

/// Classify with the documented bound at eps = 0 (no scale slack).
pub fn classify_w(w: f64, m: u64) -> ArcClass {
    classify_w_eps(w, m, 0.0)
}

/// Classify w into its minimal Farey arc at scale m; Dirichlet guarantees a
/// denominator q <= m exists.
pub fn classify_w_eps(w: f64, m: u64, eps: f64) -> ArcClass {
    assert!(m >= 1, "classification needs m >= 1");
    let mf = m as f64;
    for q in 1..=m {
        let qw = q as f64 * w;
        if (qw - qw.round()).abs() <= 1.0 / mf + 1e-15 {
            let mut b = qw.round() as i64 % q as i64;
            if b <= 0 {
                b += q as i64;
            }
            let d = w - b as f64 / q as f64;
            let phi = (d - d.round()).abs();
            let qf = q as f64;
            let inv = if phi > 0.0 { 1.0 / phi.sqrt() } else { f64::INFINITY };
            return ArcClass {
                q,
                b: b as u64,
                phi,
                major_arc: phi <= 1.0 / (qf * mf) + 1e-15,
                bound: mf.powf(eps) / qf.sqrt() * mf.min(inv),
            };
        }
    }
    unreachable!("Dirichlet approximation: some q <= m always qualifies");
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Normalized quadratic Gauss sum
///   S(b, m, q) = (1/q) sum over r mod q of e((r^2 b - r m) / q),
/// defined for gcd(b, q) = 1. Exact rational phases via integer reduction.
pub fn gauss_sum(b: i64, m: i64, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::InvalidArgument("gauss sum needs q >= 1".into()));
    }
    let qi = q as i128;
    let bn = (b as i128).rem_euclid(qi) as u64;
    if gcd(bn, q) != 1 {
        return Err(Error::InvalidArgument(format!(
            "gauss sum needs gcd(b, q) = 1, got b = {b}, q = {q}"
        )));
    }
    let mut acc = KahanC::new();
    for r in 0..q as i128 {
        let num = (r * r * (b as i128) - r * (m as i128)).rem_euclid(qi);
        acc.add(e(num as f64 / q as f64));
    }
    Ok(acc.value() / q as f64)
}

/// Largest cubic coefficient the oscillatory integral accepts at scale m.
pub fn cubic_limit(m: u64) -> f64 {
    let mf = m as f64;
    1.0 / (2.0 * mf * mf * mf)
}

/// The dual oscillatory factor of the Poisson decomposition:
///   J = integral of gamma(y/m) e((u + mm/q) y + phi y^2 + v y^3) dy
/// over the support |y| < 2m, by adaptive quadrature with absolute
/// tolerance 1e-10 m. The cubic coefficient must respect [`cubic_limit`];
/// the linear and chirp coefficients are unrestricted.
pub fn oscillatory_j(m: u64, u: f64, v: f64, phi: f64, mm: i64, q: u64) -> Result<Complex64> {
    if m == 0 || q == 0 {
        return Err(Error::InvalidArgument(
            "oscillatory integral needs m, q >= 1".into(),
        ));
    }
    if !v.is_finite() || v.abs() > cubic_limit(m) {
        return Err(Error::Range(format!(
            "cubic coefficient |v| = {} exceeds the scale-{m} limit {}",
            v.abs(),
            cubic_limit(m)
        )));
    }
    let mf = m as f64;
    let up = u + mm as f64 / q as f64;
    let f = |y: f64| SmoothCutoff::eval(y / mf) * e(y * (up + y * (phi + y * v)));
    // Panel count from the cycle budget of the phase across the support.
    let half = 2.0 * mf;
    let cycles = 2.0 * half * up.abs()
        + half * half * phi.abs()
        + half * half * half * v.abs()
        + 4.0;
    let panels = (cycles * 4.0).ceil().clamp(64.0, 1_048_576.0) as usize;
    let tol = 1e-10 * mf / panels as f64;
    let mut acc = KahanC::new();
    for p in 0..panels {
        let a = -half + 2.0 * half * p as f64 / panels as f64;
        let b = -half + 2.0 * half * (p + 1) as f64 / panels as f64;
        acc.add(adaptive_simpson(&f, a, b, tol, 28));
    }
    Ok(acc.value())
}

/// G(u, w, v) = sum over |k| <= 2m of gamma(k/m) e(k u + k^2 w + k^3 v).
/// Plain summation; no preconditions.
pub fn smooth_weyl(m: u64, u: f64, w: f64, v: f64) -> Complex64 {
    let mf = m as f64;
    let mut acc = KahanC::new();
    let lim = 2 * m as i64;
    for k in -lim..=lim {
        let g = SmoothCutoff::eval(k as f64 / mf);
        if g == 0.0 {
            continue;
        }
        let kf = k as f64;
        acc.add(g * e(kf * (u + kf * (w + kf * v))));
    }
    acc.value()
}

/// The Poisson-summation expansion of the smoothed Weyl sum at
/// w = b/q + delta: G = sum over mm of S(b, mm, q) J(mm), truncated where
/// the oscillatory factor is negligible.
#[derive(Debug, Clone)]
pub struct PoissonDecomposition {
    /// (frequency index, Gauss factor, oscillatory factor), sorted by index.
    pub terms: Vec<(i64, Complex64, Complex64)>,
    pub reconstructed: Complex64,
}

pub fn poisson_decompose(
    m: u64,
    b: i64,
    q: u64,
    delta: f64,
    u: f64,
    v: f64,
) -> Result<PoissonDecomposition> {
    if m == 0 || q == 0 {
        return Err(Error::InvalidArgument(
            "poisson decomposition needs m, q >= 1".into(),
        ));
    }
    let mf = m as f64;
    let tiny = 1e-12 * mf;
    const MAX_SPAN: i64 = 512;
    let center = (-u * q as f64).round() as i64;

    let mut terms: Vec<(i64, Complex64, Complex64)> = Vec::new();
    // Walk each direction from the resonant center until the oscillatory
    // factor stays negligible (|S| <= 1 always, so |J| controls the tail).
    for dir in [1i64, -1] {
        let mut consecutive_small = 0u32;
        let mut off = if dir == 1 { 0 } else { 1 };
        loop {
            if off > MAX_SPAN {
                return Err(Error::Precision(
                    "poisson tail did not decay within the frequency budget".into(),
                ));
            }
            let mm = center + dir * off;
            let j = oscillatory_j(m, u, v, delta, mm, q)?;
            let s = gauss_sum(b, mm, q)?;
            terms.push((mm, s, j));
            if j.norm() < tiny {
                consecutive_small += 1;
                if consecutive_small >= 3 {
                    break;
                }
            } else {
                consecutive_small = 0;
            }
            off += 1;
        }
    }
    terms.sort_by_key(|t| t.0);
    let mut acc = KahanC::new();
    for (_, s, j) in &terms {
        acc.add(s * j);
    }
    Ok(PoissonDecomposition {
        terms,
        reconstructed: acc.value(),
    })
}

/// Report of the seeded arc-bound verification.
#[derive(Debug, Clone, Copy)]
pub struct Lemma22Report {
    /// Largest |G| / (q^(-1/2) min(m, phi^(-1/2))) over the on-arc trials.
    pub max_on_ratio: f64,
    /// Largest |G| / G(0, 0, 0) over the off-arc trials.
    pub max_off_frac: f64,
    /// Largest |poisson - direct| over the trials that ran the decomposition.
    pub max_poisson_err: f64,
    pub trials_on: u64,
    pub trials_off: u64,
}

/// Statistical verification of the square-root arc bound at scale m:
/// alternating trials sample the on-arc regime (q up to m, phi inside the
/// Farey arc; every fourth trial pinned to a Gauss-sum resonance so the
/// statistic is non-vacuous) and an off-resonance regime calibrated so |G|
/// collapses. Poisson reconstruction is cross-checked whenever q is small
/// enough for the expansion to stay narrow.
pub fn verify_lemma22(m: u64, trials: u64, seed: u64, _eps: f64) -> Result<Lemma22Report> {
    if m < 4 || trials == 0 {
        return Err(Error::InvalidArgument(
            "arc verification needs m >= 4 and at least one trial".into(),
        ));
    }
    let mf = m as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trivial = smooth_weyl(m, 0.0, 0.0, 0.0).norm();
    let vmax = 1.0 / (4.0 * mf * mf * mf);

    let mut report = Lemma22Report {
        max_on_ratio: 0.0,
        max_off_frac: 0.0,
        max_poisson_err: 0.0,
        trials_on: 0,
        trials_off: 0,
    };

    let coprime_to = |rng: &mut ChaCha8Rng, q: u64| loop {
        let b = rng.gen_range(1..=q);
        if gcd(b, q) == 1 {
            return b;
        }
    };

    for i in 0..trials {
        let on_arc = i % 2 == 0;
        if on_arc {
            let resonant = i % 8 == 0;
            let mut q = rng.gen_range(1..=m);
            if resonant && q % 2 == 0 {
                q -= 1; // odd q keeps |S| = q^(-1/2) exactly at every index
            }
            let q = q.max(1);
            let b = coprime_to(&mut rng, q);
            let phi_cap = if resonant {
                (1.0 / (q as f64 * mf)).min(1.0 / (16.0 * mf * mf))
            } else {
                1.0 / (q as f64 * mf)
            };
            let phi = rng.gen::<f64>() * phi_cap;
            let delta = if rng.gen_bool(0.5) { phi } else { -phi };
            let u = if resonant {
                rng.gen_range(0..q) as f64 / q as f64
            } else {
                rng.gen::<f64>()
            };
            let v_scale = if resonant { vmax / 64.0 } else { vmax };
            let v = (2.0 * rng.gen::<f64>() - 1.0) * v_scale;
            let w = b as f64 / q as f64 + delta;
            let g = smooth_weyl(m, u, w, v).norm();
            let inv = if phi > 0.0 { 1.0 / phi.sqrt() } else { f64::INFINITY };
            let bound = mf.min(inv) / (q as f64).sqrt();
            report.max_on_ratio = report.max_on_ratio.max(g / bound);
            report.trials_on += 1;
            if q <= 16 {
                let p = poisson_decompose(m, b as i64, q, delta, u, v)?;
                let err = (p.reconstructed - smooth_weyl(m, u, w, v)).norm();
                report.max_poisson_err = report.max_poisson_err.max(err);
            }
        } else {
            let q_cap = (mf.powf(0.95) / 16.0).floor().max(1.0) as u64;
            let q = rng.gen_range(1..=q_cap);
            let b = coprime_to(&mut rng, q);
            let phi_cap = (3.0 / (32.0 * q as f64 * mf.powf(1.05)))
                .min(1.0 / (16.0 * mf * mf));
            let phi = rng.gen::<f64>() * phi_cap;
            let delta = if rng.gen_bool(0.5) { phi } else { -phi };
            // Pin u halfway between Poisson frequencies: every J factor is
            // off-resonance and the whole sum collapses.
            let mm = rng.gen_range(0..q) as f64;
            let jitter = (2.0 * rng.gen::<f64>() - 1.0) / (64.0 * q as f64);
            let u = (mm + 0.5) / q as f64 + jitter;
            let v = (2.0 * rng.gen::<f64>() - 1.0) * vmax;
            let w = b as f64 / q as f64 + delta;
            let g = smooth_weyl(m, u, w, v).norm();
            report.max_off_frac = report.max_off_frac.max(g / trivial);
            report.trials_off += 1;
            let p = poisson_decompose(m, b as i64, q, delta, u, v)?;
            let err = (p.reconstructed - smooth_weyl(m, u, w, v)).norm();
            report.max_poisson_err = report.max_poisson_err.max(err);
        }
    }
    Ok(report)
}

/// Adaptive Simpson on a complex integrand, splitting until the classical
/// error estimate |S_fine - S_coarse| / 15 meets the tolerance.
fn adaptive_simpson<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Complex64 {
    fn simpson(fa: Complex64, fm: Complex64, fb: Complex64, h: f64) -> Complex64 {
        (fa + 4.0 * fm + fb) * (h / 6.0)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        m: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = left + right - whole;
        if depth == 0 || err.norm() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        recurse(f, a, lm, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, rm, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, m, b, fa, fm, fb, whole, tol, max_depth)
}
