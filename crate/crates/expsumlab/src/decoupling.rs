//! Decoupling-ratio experiments: parabola blocks on the discrete torus,
//! bilinear curve blocks over a ball, a two-block model surface, and a
//! transversality contrast.
//!
//! Every experiment measures a sixth-moment ratio of a trigonometric wave
//! against a frozen normalization. Torus averages are taken on grids fine
//! enough to be exact for the expanded sixth power; ball averages use the
//! shared quasirandom stream with frequency recentring (the moduli of the
//! waves are invariant under shifting every frequency by a constant vector,
//! and centered frequencies keep the raw phases small).

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::expsum::{eval_surface_sum, Point4};
use crate::util::{batch_stderr, e, Kahan, KahanC, QuasiRandom4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One-dimensional height profile for the model parabola experiment.
#[derive(Debug, Clone, Copy)]
pub enum Phi1D {
    Square,
}

/// Coefficient families shared by the ratio experiments.
#[derive(Debug, Clone, Copy)]
pub enum CoeffFamily {
    /// A single unit coefficient at the given index.
    OneHot(usize),
    Constant,
    /// Seeded random +-1 signs.
    RandomSigns(u64),
}

impl CoeffFamily {
    fn realize(&self, len: usize) -> Result<Vec<Complex64>> {
        if len == 0 {
            return Err(Error::Degenerate("empty frequency set".into()));
        }
        Ok(match *self {
            CoeffFamily::OneHot(i) => {
                if i >= len {
                    return Err(Error::InvalidArgument(format!(
                        "one-hot index {i} outside the {len} active frequencies"
                    )));
                }
                let mut c = vec![Complex64::new(0.0, 0.0); len];
                c[i] = Complex64::new(1.0, 0.0);
                c
            }
            CoeffFamily::Constant => vec![Complex64::new(1.0, 0.0); len],
            CoeffFamily::RandomSigns(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..len)
                    .map(|_| Complex64::new(if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, 0.0))
                    .collect()
            }
        })
    }
}

/// Closed t-interval selecting the active frequencies of one factor.
#[derive(Debug, Clone, Copy)]
pub struct ArcSpec {
    pub lo: f64,
    pub hi: f64,
}

impl ArcSpec {
    pub fn new(lo: f64, hi: f64) -> ArcSpec {
        ArcSpec { lo, hi }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RhsNorm {
    L2,
    /// l^6 coefficient norm; carries an n^(1/3) allowance in the bilinear
    /// comparison.
    L6,
}

#[derive(Debug, Clone, Copy)]
pub enum SurfaceMode {
    /// Denominator ||c||_2.
    PointMass,
    /// Group the xi1 columns into blocks of m and take the l^2 aggregate of
    /// the block masses with the sharp sixth-moment block allowance
    /// B^(1/3); a single spanning block reproduces PointMass exactly.
    Blocks { m: usize },
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub ratio: f64,
    pub stderr: f64,
    pub samples: u64,
}

#[derive(Debug, Clone)]
pub struct TransversalityReport {
    pub ratio: f64,
    pub ratio_same_arc: f64,
    pub samples: u64,
}

fn exact_sqrt(n: u64) -> Result<u64> {
    let k = (n as f64).sqrt().round() as u64;
    if k == 0 || k * k != n {
        return Err(Error::InvalidArgument(format!(
            "scale n = {n} must be a positive perfect square"
        )));
    }
    Ok(k)
}

fn l2_norm(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn l6_norm(c: &[Complex64]) -> f64 {
    c.iter()
        .map(|z| z.norm_sqr().powi(3))
        .sum::<f64>()
        .powf(1.0 / 6.0)
}

/// Quasirandom sampler of the closed ball of the given radius, by rejection
/// from the enclosing cube.
struct BallSampler {
    qr: QuasiRandom4,
    radius: f64,
}

impl BallSampler {
    fn new(seed: u64, radius: f64) -> BallSampler {
        BallSampler {
            qr: QuasiRandom4::new(seed),
            radius,
        }
    }

    fn next(&mut self) -> [f64; 4] {
        loop {
            let u = self.qr.next_point();
            let y = [
                2.0 * u[0] - 1.0,
                2.0 * u[1] - 1.0,
                2.0 * u[2] - 1.0,
                2.0 * u[3] - 1.0,
            ];
            if y.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                return [
                    y[0] * self.radius,
                    y[1] * self.radius,
                    y[2] * self.radius,
                    y[3] * self.radius,
                ];
            }
        }
    }
}

/// Sixth-moment ratio of a parabola block sum with sqrt(n) frequencies
/// k/sqrt(n), measured on a discrete torus fine enough to make the average
/// exact, against the l^2 coefficient mass.
pub fn parabola_ratio(n: u64, phi: &Phi1D, cf: &CoeffFamily) -> Result<f64> {
    let Phi1D::Square = phi;
    let k = exact_sqrt(n)? as usize;
    let coeffs = cf.realize(k)?;
    // In torus coordinates the wave is sum of c_j e(j u + j^2 w); the
    // expanded sixth power has linear frequencies up to 3(k-1) and quadratic
    // ones up to 3(k^2-1), so these grids average it exactly.
    let l1 = 6 * k + 1;
    let l2 = 12 * (k - 1).max(1).pow(2) + 1;
    let rows: Vec<f64> = (0..l2)
        .into_par_iter()
        .map(|j| {
            let wj = j as f64 / l2 as f64;
            let rotated: Vec<Complex64> = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let f = (i + 1) as f64;
                    c * e(f * f * wj)
                })
                .collect();
            let mut row = Kahan::new();
            for i in 0..l1 {
                let ui = i as f64 / l1 as f64;
                let mut acc = KahanC::new();
                for (idx, c) in rotated.iter().enumerate() {
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    acc.add(*c * e((idx + 1) as f64 * ui));
                }
                row.add(acc.value().norm_sqr().powi(3));
            }
            row.value()
        })
        .collect();
    let mut total = Kahan::new();
    for r in rows {
        total.add(r);
    }
    let mean = total.value() / (l1 as f64 * l2 as f64);
    Ok(mean.powf(1.0 / 6.0) / l2_norm(&coeffs))
}

/// Frequencies of one arc at spacing 1/den, as t-values.
fn arc_freqs(arc: ArcSpec, den: u64) -> Result<Vec<f64>> {
    if !arc.lo.is_finite() || !arc.hi.is_finite() || arc.lo >= arc.hi {
        return Err(Error::InvalidArgument(format!(
            "arc [{}, {}] is not a nondegenerate interval",
            arc.lo, arc.hi
        )));
    }
    let lo = (arc.lo * den as f64).ceil() as i64;
    let hi = (arc.hi * den as f64).floor() as i64;
    if lo > hi {
        return Err(Error::Degenerate(format!(
            "arc [{}, {}] holds no frequency at spacing 1/{den}",
            arc.lo, arc.hi
        )));
    }
    Ok((lo..=hi).map(|m| m as f64 / den as f64).collect())
}

/// Recentred four-dimensional curve frequencies for one arc.
fn curve_frequencies(curve: &Curve, ts: &[f64]) -> Result<Vec<[f64; 4]>> {
    let mut raw = Vec::with_capacity(ts.len());
    for &t in ts {
        raw.push([t, t * t, curve.eval_phi(3, 0, t)?, curve.eval_phi(4, 0, t)?]);
    }
    let mut mean = [0.0f64; 4];
    for xi in &raw {
        for (m, v) in mean.iter_mut().zip(xi.iter()) {
            *m += v / ts.len() as f64;
        }
    }
    for xi in raw.iter_mut() {
        for (v, m) in xi.iter_mut().zip(mean.iter()) {
            *v -= m;
        }
    }
    Ok(raw)
}

fn wave(freqs: &[[f64; 4]], coeffs: &[Complex64], x: &[f64; 4]) -> Complex64 {
    let mut acc = KahanC::new();
    for (xi, c) in freqs.iter().zip(coeffs.iter()) {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        acc.add(*c * e(xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2] + xi[3] * x[3]));
    }
    acc.value()
}

fn check_disjoint(arc1: ArcSpec, arc2: ArcSpec) -> Result<()> {
    if arc1.hi > arc2.lo {
        return Err(Error::InvalidArgument(format!(
            "arcs [{}, {}] and [{}, {}] must be disjoint and ordered",
            arc1.lo, arc1.hi, arc2.lo, arc2.hi
        )));
    }
    Ok(())
}

/// Bilinear sixth-moment ratio of two curve block sums on separated arcs,
/// averaged over the ball of radius n, against a coefficient norm.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_curve_ratio(
    n: u64,
    curve: &Curve,
    arc1: ArcSpec,
    arc2: ArcSpec,
    cf1: &CoeffFamily,
    cf2: &CoeffFamily,
    rhs: RhsNorm,
    samples: u64,
    seed: u64,
) -> Result<RatioReport> {
    let k = exact_sqrt(n)?;
    check_disjoint(arc1, arc2)?;
    if samples < 64 {
        return Err(Error::InvalidArgument("need at least 64 samples".into()));
    }
    let ts1 = arc_freqs(arc1, k)?;
    let ts2 = arc_freqs(arc2, k)?;
    let c1 = cf1.realize(ts1.len())?;
    let c2 = cf2.realize(ts2.len())?;
    let f1 = curve_frequencies(curve, &ts1)?;
    let f2 = curve_frequencies(curve, &ts2)?;

    let mut sampler = BallSampler::new(seed, n as f64);
    let mut vals = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let x = sampler.next();
        let a = wave(&f1, &c1, &x).norm_sqr();
        let b = wave(&f2, &c2, &x).norm_sqr();
        vals.push((a * b).powi(3));
    }
    let (mean, stderr6) = batch_stderr(&vals, 64);
    let denom = match rhs {
        RhsNorm::L2 => l2_norm(&c1) * l2_norm(&c2),
        RhsNorm::L6 => l6_norm(&c1) * l6_norm(&c2),
    };
    Ok(RatioReport {
        ratio: mean.powf(1.0 / 6.0) / denom,
        stderr: stderr6,
        samples,
    })
}

/// Two-block model surface: parabolic leads in each of the two lattice
/// directions with a shared, n^(-3/2)-scaled cubic correction drawn from the
/// curve's local expansions at the two base points.
#[derive(Debug, Clone)]
pub struct SurfacePsi {
    c1: f64,
    c2: f64,
    g1: f64,
    g2: f64,
    amp: f64,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// Smallest own-direction second derivative of the leading pieces.
    pub lead_curvature: f64,
    /// Largest cross second derivative (the flat directions).
    pub flat_curvature: f64,
}

impl SurfacePsi {
    pub fn two_block_instance(
        n: u64,
        curve: &Curve,
        t1: f64,
        t2: f64,
        a: f64,
    ) -> Result<SurfacePsi> {
        if n == 0 {
            return Err(Error::InvalidArgument("surface scale n must be positive".into()));
        }
        if t1 == t2 || !a.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "two-block instance needs distinct base points and finite amplitude, \
                 got t1 = {t1}, t2 = {t2}, a = {a}"
            )));
        }
        let c1 = curve.eval_phi(3, 2, t1)? / 2.0;
        let c2 = curve.eval_phi(3, 2, t2)? / 2.0;
        let g1 = curve.eval_phi(3, 3, t1)? / 6.0;
        let g2 = curve.eval_phi(3, 3, t2)? / 6.0;
        if c1 <= 0.0 || c2 <= 0.0 {
            return Err(Error::Degenerate(format!(
                "base points carry nonpositive curvature ({c1}, {c2})"
            )));
        }
        Ok(SurfacePsi {
            c1,
            c2,
            g1,
            g2,
            amp: a,
            scale: (n as f64).powf(1.5),
        })
    }

    /// Heights (h3, h4) over a lattice point (xi1, xi2) in [0, 1]^2.
    pub fn heights(&self, xi1: f64, xi2: f64) -> Result<(f64, f64)> {
        for xi in [xi1, xi2] {
            if !(-1e-9..=1.0 + 1e-9).contains(&xi) {
                return Err(Error::Domain(format!(
                    "lattice coordinate {xi} escapes the unit square"
                )));
            }
        }
        let cubic = self.amp * (self.g1 * xi1.powi(3) - self.g2 * xi2.powi(3)) / self.scale;
        Ok((self.c1 * xi1 * xi1 + cubic, self.c2 * xi2 * xi2 + cubic))
    }

    /// Extremes of the analytic second derivatives over a grid of the unit
    /// square: the leading own-direction curvatures and the flat cross terms.
    pub fn condition_report(&self, grid: usize) -> Result<ConditionReport> {
        if grid < 2 {
            return Err(Error::InvalidArgument("condition grid needs >= 2 points".into()));
        }
        let mut lead = f64::INFINITY;
        let mut flat = 0.0f64;
        for i in 0..=grid {
            let xi = i as f64 / grid as f64;
            let own3 = 2.0 * self.c1 + 6.0 * self.amp * self.g1 * xi / self.scale;
            let own4 = 2.0 * self.c2 - 6.0 * self.amp * self.g2 * xi / self.scale;
            let cross3 = -6.0 * self.amp * self.g2 * xi / self.scale;
            let cross4 = 6.0 * self.amp * self.g1 * xi / self.scale;
            lead = lead.min(own3).min(own4);
            flat = flat.max(cross3.abs()).max(cross4.abs());
        }
        Ok(ConditionReport {
            lead_curvature: lead,
            flat_curvature: flat,
        })
    }
}

/// Sixth-moment ratio of a surface sum over the sqrt(n) lattice against a
/// point-mass or blockwise coefficient normalization, averaged over the ball
/// of radius n.
pub fn surface_ratio(
    n: u64,
    psi: &SurfacePsi,
    cf: &CoeffFamily,
    mode: SurfaceMode,
    samples: u64,
    seed: u64,
) -> Result<RatioReport> {
    let k = exact_sqrt(n)? as usize;
    if samples < 64 {
        return Err(Error::InvalidArgument("need at least 64 samples".into()));
    }
    let coeffs = cf.realize(k * k)?;
    let mut sampler = BallSampler::new(seed, n as f64);
    let mut vals = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let x = sampler.next();
        let f = eval_surface_sum(psi, k, &coeffs, Point4::new(x[0], x[1], x[2], x[3]))?;
        vals.push(f.norm_sqr().powi(3));
    }
    let (mean, stderr6) = batch_stderr(&vals, 64);
    let denom = match mode {
        SurfaceMode::PointMass => l2_norm(&coeffs),
        SurfaceMode::Blocks { m } => {
            if m == 0 || m > k {
                return Err(Error::InvalidArgument(format!(
                    "block width m = {m} must lie in [1, {k}]"
                )));
            }
            let blocks = k.div_ceil(m);
            let mut mass = 0.0f64;
            for b in 0..blocks {
                let mut block = 0.0f64;
                for i1 in (b * m)..((b + 1) * m).min(k) {
                    for i2 in 0..k {
                        block += coeffs[i1 * k + i2].norm_sqr();
                    }
                }
                mass += block;
            }
            (blocks as f64).powf(1.0 / 3.0) * mass.sqrt()
        }
    };
    Ok(RatioReport {
        ratio: mean.powf(1.0 / 6.0) / denom,
        stderr: stderr6,
        samples,
    })
}

/// Normalized sixth-moment contrast of two curve block waves: the ratio is
/// scaled so that two single waves give exactly 2/pi^2. The same-arc figure
/// repeats the first factor (the parallel configuration), which is always at
/// least 2/pi^2 and so never falls below the decorrelated transversal value.
#[allow(clippy::too_many_arguments)]
pub fn transversality_check(
    n: u64,
    curve: &Curve,
    arc1: ArcSpec,
    arc2: ArcSpec,
    cf1: &CoeffFamily,
    cf2: &CoeffFamily,
    samples: u64,
    seed: u64,
) -> Result<TransversalityReport> {
    exact_sqrt(n)?;
    check_disjoint(arc1, arc2)?;
    if samples < 64 {
        return Err(Error::InvalidArgument("need at least 64 samples".into()));
    }
    let ts1 = arc_freqs(arc1, n)?;
    let ts2 = arc_freqs(arc2, n)?;
    let c1 = cf1.realize(ts1.len())?;
    let c2 = cf2.realize(ts2.len())?;
    let f1 = curve_frequencies(curve, &ts1)?;
    let f2 = curve_frequencies(curve, &ts2)?;

    let mut sampler = BallSampler::new(seed, n as f64);
    let mut cross = Kahan::new();
    let mut cross_same = Kahan::new();
    let mut m1 = Kahan::new();
    let mut m2 = Kahan::new();
    for _ in 0..samples {
        let x = sampler.next();
        let a = wave(&f1, &c1, &x).norm_sqr();
        let b = wave(&f2, &c2, &x).norm_sqr();
        cross.add((a * b).powi(3));
        // Parallel contrast: both factors are the first wave, so the sixth
        // powers are perfectly associated and the normalized ratio can never
        // fall below 2/pi^2 (second moments dominate squared first moments).
        cross_same.add(a.powi(3) * a.powi(3));
        m1.add(a.powi(3));
        m2.add(b.powi(3));
    }
    let s = samples as f64;
    let norm = 2.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let m1s = m1.value() / s;
    let ratio = norm * (cross.value() / s) / (m1s * (m2.value() / s));
    let ratio_same_arc = norm * (cross_same.value() / s) / (m1s * m1s);
    Ok(TransversalityReport {
        ratio,
        ratio_same_arc,
        samples,
    })
}
