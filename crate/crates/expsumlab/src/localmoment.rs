//! Windowed local moments of the quadratic Weyl sum G(u, w) = sum of
//! e(k u + k^2 w) over k in [1, m], and the dyadic block-sum inequality over
//! the m^2 frequency classes.
//!
//! The class integral I_a integrates |G|^6 over the full u-period and a
//! w-window of width c/m^2 centered at a/m^2. Expanding |G|^6 into ordered
//! 6-tuples, the u-average keeps pairs of triples with equal linear sums,
//! and the w-window turns each surviving square-sum difference d into the
//! exact factor L sinc(pi d L) e(d a / m^2) with L = c/m^2. The d-profile
//! R(d) is assembled once from 3-multiset classes; single queries sum the
//! profile directly and the full table folds it modulo m^2 and applies one
//! inverse FFT.

use crate::error::{Error, Result};
use crate::util::Kahan;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::HashMap;

/// All m^2 class integrals at a common window density.
#[derive(Debug, Clone)]
pub struct LocalMomentTable {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Lemma76Row {
    pub j: u32,
    pub lhs: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone)]
pub struct Lemma76Report {
    pub rows: Vec<Lemma76Row>,
    pub max_normalized: f64,
}

fn validate(m: u64, c: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "window count needs m >= 2, got {m}"
        )));
    }
    if !c.is_finite() || c <= 0.0 || c > (m * m) as f64 {
        return Err(Error::InvalidArgument(format!(
            "window density c = {c} must lie in (0, m^2]"
        )));
    }
    Ok(())
}

/// Autocorrelation R(d) of the square-sum histogram over linear-sum classes
/// of ordered triples in [1, m]: R(d) counts ordered 6-tuples with equal
/// linear sums and square-sum difference exactly d. Index offset: d + dmax.
fn square_profile(m: u64) -> (Vec<f64>, i64) {
    let mi = m as i64;
    let dmax = 3 * mi * mi - 3;
    // Linear-sum classes: s1 -> (s2 -> ordered-triple count).
    let mut classes: HashMap<i64, HashMap<i64, f64>> = HashMap::new();
    // 3-multisets with multinomial weights cover ordered triples.
    for a in 1..=mi {
        for b in a..=mi {
            for c in b..=mi {
                let w = if a == b && b == c {
                    1.0
                } else if a == b || b == c {
                    3.0
                } else {
                    6.0
                };
                *classes
                    .entry(a + b + c)
                    .or_default()
                    .entry(a * a + b * b + c * c)
                    .or_insert(0.0) += w;
            }
        }
    }
    let mut r = vec![0.0f64; (2 * dmax + 1) as usize];
    for hist in classes.values() {
        for (&s2a, &wa) in hist.iter() {
            for (&s2b, &wb) in hist.iter() {
                r[(s2a - s2b + dmax) as usize] += wa * wb;
            }
        }
    }
    (r, dmax)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Integral of |G|^6 over u in [0, 1] and w in a window of width c/m^2
/// centered at a/m^2.
pub fn local_moment(m: u64, a: i64, c: f64) -> Result<f64> {
    validate(m, c)?;
    let (r, dmax) = square_profile(m);
    let mm = (m * m) as f64;
    let l = c / mm;
    let mut acc = Kahan::new();
    // d = 0 term, then symmetric pairs: R(-d) = R(d).
    acc.add(r[dmax as usize] * l);
    for d in 1..=dmax {
        let rd = r[(d + dmax) as usize];
        if rd == 0.0 {
            continue;
        }
        let df = d as f64;
        let factor = l * sinc(std::f64::consts::PI * df * l);
        acc.add(2.0 * rd * factor * (std::f64::consts::TAU * df * a as f64 / mm).cos());
    }
    Ok(acc.value())
}

/// All class integrals at once: fold the d-profile modulo m^2 and apply one
/// length-m^2 inverse FFT.
pub fn local_moment_table(m: u64, c: f64) -> Result<LocalMomentTable> {
    validate(m, c)?;
    let (r, dmax) = square_profile(m);
    let mm = (m * m) as usize;
    let l = c / mm as f64;
    let mut folded = vec![Complex64::new(0.0, 0.0); mm];
    for d in -dmax..=dmax {
        let rd = r[(d + dmax) as usize];
        if rd == 0.0 {
            continue;
        }
        let factor = l * sinc(std::f64::consts::PI * d as f64 * l);
        folded[(d.rem_euclid(mm as i64)) as usize] += Complex64::new(rd * factor, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(mm);
    fft.process(&mut folded);
    Ok(LocalMomentTable {
        values: folded.iter().map(|z| z.re).collect(),
    })
}

/// Dyadic block-sum inequality over the classes: for every block scale j,
/// the cubes of the block l^(2/3) sums stay under
/// 20 (log2 m)^3 (m^4 2^(2j) + m^6).
pub fn lemma76_check(m: u64, c: f64) -> Result<Lemma76Report> {
    if !m.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "block scales need m to be a power of two, got {m}"
        )));
    }
    let table = local_moment_table(m, c)?;
    let log2m = m.ilog2();
    let mf = m as f64;
    let mut rows = Vec::new();
    let mut max_normalized = 0.0f64;
    for j in 0..=(2 * log2m) {
        let block = 1usize << j;
        let mut lhs = Kahan::new();
        for chunk in table.values.chunks(block) {
            let mut s = Kahan::new();
            for &v in chunk {
                s.add(v.max(0.0).powf(2.0 / 3.0));
            }
            lhs.add(s.value().powi(3));
        }
        let allowance = 20.0
            * (log2m as f64).powi(3)
            * (mf.powi(4) * (1u64 << (2 * j)) as f64 + mf.powi(6));
        let normalized = lhs.value() / allowance;
        max_normalized = max_normalized.max(normalized);
        rows.push(Lemma76Row {
            j,
            lhs: lhs.value(),
            normalized,
        });
    }
    Ok(Lemma76Report {
        rows,
        max_normalized,
    })
}
