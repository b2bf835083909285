//! Evaluation of the exponential sums themselves: curve sums over integer
//! intervals, the cubic-augmented quadratic Weyl sum, x1-grid slices, and
//! surface sums over a square frequency lattice.
//!
//! The conjecture-normalization phase of a curve sum at scale n is
//!   n x1 + n^2 x2 + phi3(n/N) x3 + phi4(n/N) x4,
//! summed over integers n in an interval. Renormalized coordinates divide x2
//! by N and multiply x3, x4 by N, which puts all four directions on unit
//! scale for arc analysis.

use crate::curve::Curve;
use crate::decoupling::SurfacePsi;
use crate::error::{Error, Result};
use crate::util::{e, KahanC};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// A point in the four phase coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point4 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl Point4 {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Point4 {
        Point4 { x1, x2, x3, x4 }
    }

    pub fn zero() -> Point4 {
        Point4::new(0.0, 0.0, 0.0, 0.0)
    }
}

/// A closed integer interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalZ {
    pub lo: i64,
    pub hi: i64,
}

impl IntervalZ {
    pub fn new(lo: i64, hi: i64) -> Result<IntervalZ> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "empty interval [{lo}, {hi}]"
            )));
        }
        Ok(IntervalZ { lo, hi })
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1) as u64
    }

    pub fn is_empty(&self) -> bool {
        false // construction forbids lo > hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

/// Phase-coordinate convention for curve sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    /// x as stated in the conjectural moment bound.
    Conjecture,
    /// Unit-scale coordinates: x2 scaled down by n, x3/x4 scaled up by n.
    Renormalized,
}

/// E(x) = sum over the interval of e(m x1 + m^2 x2 + phi3(m/n) x3 + phi4(m/n) x4).
pub fn eval_curve_sum(
    curve: &Curve,
    n: u64,
    interval: IntervalZ,
    x: Point4,
    coords: Coords,
) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::InvalidArgument("curve sums need n >= 1".into()));
    }
    let nf = n as f64;
    let x = match coords {
        Coords::Conjecture => x,
        Coords::Renormalized => Point4::new(x.x1, x.x2 / nf, x.x3 * nf, x.x4 * nf),
    };
    let mut acc = KahanC::new();
    for m in interval.iter() {
        let t = m as f64 / nf;
        let p3 = curve.eval_phi(3, 0, t)?;
        let p4 = curve.eval_phi(4, 0, t)?;
        let mf = m as f64;
        acc.add(e(mf * x.x1 + mf * mf * x.x2 + p3 * x.x3 + p4 * x.x4));
    }
    Ok(acc.value())
}

/// The sharp-cutoff quadratic Weyl sum with a cubic perturbation:
/// sum over k = 1..m of e(k u + k^2 w + k^3 v). No preconditions; the
/// arc-theoretic bounds live in [`crate::arcs`].
pub fn eval_quadratic_weyl(m: u64, u: f64, w: f64, v: f64) -> Complex64 {
    let mut acc = KahanC::new();
    for k in 1..=m {
        let kf = k as f64;
        acc.add(e(kf * u + kf * kf * w + kf * kf * kf * v));
    }
    acc.value()
}

/// Curve-sum values along the x1 grid { j / l : j = 0..l } at a fixed
/// (x2, x3, x4) slice, computed with one length-l inverse FFT. Requires
/// l >= |interval| so that distinct terms land in distinct frequency bins.
pub fn eval_grid_x1(
    curve: &Curve,
    n: u64,
    interval: IntervalZ,
    x2: f64,
    x3: f64,
    x4: f64,
    l: usize,
) -> Result<Vec<Complex64>> {
    if (l as u64) < interval.len() {
        return Err(Error::InvalidArgument(format!(
            "grid length {l} aliases an interval of {} terms",
            interval.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("curve sums need n >= 1".into()));
    }
    let nf = n as f64;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); l];
    for m in interval.iter() {
        let t = m as f64 / nf;
        let p3 = curve.eval_phi(3, 0, t)?;
        let p4 = curve.eval_phi(4, 0, t)?;
        let mf = m as f64;
        let c = e(mf * mf * x2 + p3 * x3 + p4 * x4);
        let bin = m.rem_euclid(l as i64) as usize;
        spectrum[bin] += c;
    }
    // Unnormalized inverse transform: out[j] = sum_b spectrum[b] e(b j / l).
    let fft = FftPlanner::new().plan_fft_inverse(l);
    fft.process(&mut spectrum);
    Ok(spectrum)
}

/// Surface sum over the k-by-k lattice xi = (i1/k, i2/k), i in [1, k]^2:
/// sum of coeffs[(i1-1) k + (i2-1)] e(xi1 x1 + xi2 x2 + h3 x3 + h4 x4)
/// with (h3, h4) the surface heights at xi.
pub fn eval_surface_sum(
    psi: &SurfacePsi,
    k: usize,
    coeffs: &[Complex64],
    x: Point4,
) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidArgument("surface lattice needs k >= 1".into()));
    }
    if coeffs.len() != k * k {
        return Err(Error::InvalidArgument(format!(
            "expected {} coefficients for a {k}x{k} lattice, got {}",
            k * k,
            coeffs.len()
        )));
    }
    let kf = k as f64;
    let mut acc = KahanC::new();
    for i1 in 1..=k {
        let xi1 = i1 as f64 / kf;
        for i2 in 1..=k {
            let xi2 = i2 as f64 / kf;
            let c = coeffs[(i1 - 1) * k + (i2 - 1)];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (h3, h4) = psi.heights(xi1, xi2)?;
            acc.add(c * e(xi1 * x.x1 + xi2 * x.x2 + h3 * x.x3 + h4 * x.x4));
        }
    }
    Ok(acc.value())
}
