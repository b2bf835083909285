//! Constructive lower bounds for moments over conjecture windows, and a
//! spectral block superposition check.
//!
//! The lower-bound engine places dyadic blocks of M consecutive terms in the
//! upper half of the range and measures, for each block, the box of phase
//! points on which every term of the block stays within one eighth of a
//! period of the block center: there |E| >= M cos(pi/4). The x1/x2 spreads
//! give exact factors 4 w_i with w_i = 1/(32 M^i); the x3/x4 directions form
//! a sheared slab whose intersection with the window is integrated exactly
//! (piecewise linear in the shear variable).

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::util::e;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct LowerBoundReport {
    pub value: f64,
    /// Block length M.
    pub m_block: u64,
    pub blocks: u64,
    pub per_block: Vec<f64>,
}

/// Exact integral of the clipped slab length
///   len(x) = |[-c0 - s x, c0 - s x] intersect [-w, w]|
/// over x in [-a, a]. len is piecewise linear in x, so trapezoid integration
/// between breakpoints is exact.
fn slab_integral(c0: f64, s: f64, w: f64, a: f64) -> f64 {
    let len = |x: f64| -> f64 {
        let lo = (-c0 - s * x).max(-w);
        let hi = (c0 - s * x).min(w);
        (hi - lo).max(0.0)
    };
    let mut cuts = vec![-a, a];
    if s != 0.0 {
        for target in [w, -w] {
            cuts.push((c0 - target) / s);
            cuts.push((-c0 - target) / s);
        }
    }
    cuts.retain(|x| x.is_finite() && *x >= -a && *x <= a);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (x0, x1) = (pair[0], pair[1]);
        total += 0.5 * (len(x0) + len(x1)) * (x1 - x0);
    }
    total
}

/// Blockwise constructive lower bound for the p-th moment over the window
/// x1, x2 in unit periods, |x3| <= n^alpha, |x4| <= n^beta.
pub fn lower_bound_blocks(
    curve: &Curve,
    n: u64,
    p: f64,
    alpha: f64,
    beta: f64,
) -> Result<LowerBoundReport> {
    let _ = curve; // the construction uses only the shared quadratic layer
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "block construction needs n >= 4, got {n}"
        )));
    }
    if !p.is_finite() || p < 1.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "exponents (p, alpha, beta) = ({p}, {alpha}, {beta}) must be finite with p >= 1"
        )));
    }
    let nf = n as f64;
    // Critical p pins blocks at half the range; below it the block length
    // balances the two window exponents, rounded to a dyadic size.
    let m_block: u64 = if p >= 11.0 {
        n / 2
    } else {
        let target = nf.powf(1.0 - alpha / 3.0).max(nf.powf(1.0 - beta / 4.0));
        let log2 = target.log2().round().max(0.0) as u32;
        1u64 << log2
    };
    if m_block == 0 || m_block > n / 2 {
        return Err(Error::Degenerate(format!(
            "block length {m_block} does not fit the upper half of the range"
        )));
    }
    let mf = m_block as f64;
    let w1 = 1.0 / (32.0 * mf);
    let w2 = 1.0 / (32.0 * mf * mf);
    let w3 = 1.0 / (32.0 * mf * mf * mf);
    let w4 = 1.0 / (32.0 * mf * mf * mf * mf);
    let amp = (mf * std::f64::consts::FRAC_1_SQRT_2).powf(p);
    let c0 = w3 * nf * nf * nf;
    let a4 = nf.powf(beta).min(nf.powf(4.0) * w4);
    let w3_window = nf.powf(alpha);

    let mut per_block = Vec::new();
    let mut h = n / 2;
    while h + m_block <= n {
        let shear = 4.0 * h as f64 / nf;
        let slab = slab_integral(c0, shear, w3_window, a4);
        let measure = 4.0 * w1 * 4.0 * w2 * slab;
        per_block.push(measure * amp);
        h += m_block;
    }
    if per_block.is_empty() {
        return Err(Error::Degenerate(
            "no block fits between n/2 and n at this block length".into(),
        ));
    }
    let value: f64 = per_block.iter().sum();
    Ok(LowerBoundReport {
        value,
        m_block,
        blocks: per_block.len() as u64,
        per_block,
    })
}

/// Integer frequency blocks, admissible when the doubled blocks (each block
/// dilated by two about its own center) are pairwise disjoint.
#[derive(Debug, Clone)]
pub struct SpectralLayout {
    blocks: Vec<(u64, u64)>,
}

impl SpectralLayout {
    pub fn new(blocks: Vec<(u64, u64)>) -> Result<SpectralLayout> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("layout needs at least one block".into()));
        }
        for &(lo, hi) in &blocks {
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "block ({lo}, {hi}) is not an interval"
                )));
            }
        }
        // Doubled intervals in half-integer units: center 2c = lo + hi,
        // doubled half-width 2w = 2 (hi - lo).
        let doubled: Vec<(i64, i64)> = blocks
            .iter()
            .map(|&(lo, hi)| {
                let c2 = (lo + hi) as i64;
                let w2 = 2 * (hi - lo) as i64;
                (c2 - w2, c2 + w2)
            })
            .collect();
        for i in 0..doubled.len() {
            for j in (i + 1)..doubled.len() {
                let (a, b) = (doubled[i], doubled[j]);
                if a.0 <= b.1 && b.0 <= a.1 {
                    return Err(Error::InvalidArgument(format!(
                        "doubled blocks {:?} and {:?} overlap",
                        blocks[i], blocks[j]
                    )));
                }
            }
        }
        Ok(SpectralLayout { blocks })
    }

    pub fn blocks(&self) -> &[(u64, u64)] {
        &self.blocks
    }
}

#[derive(Debug, Clone)]
pub struct SuperpositionReport {
    pub ratio: f64,
}

/// Compare the p-th moment of a random superposition against the l^2
/// aggregate of the per-block moments:
///   ratio = mean|F|^p / (sum_b (mean|F_b|^p)^(2/p))^(p/2).
/// Exactly one at p = 2 (Parseval) and for a single block at any p. The
/// periodic grid is sized so that every moment average is exact.
pub fn block_superposition_check(
    layout: &SpectralLayout,
    p: u32,
    seed: u64,
) -> Result<SuperpositionReport> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "superposition exponent p = {p} must be even and at least 2"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(u64, Complex64)> = layout
        .blocks
        .iter()
        .flat_map(|&(lo, hi)| (lo..=hi).collect::<Vec<_>>())
        .map(|f| (f, e(rng.gen_range(0.0..1.0))))
        .collect();
    let fmax = layout.blocks.iter().map(|b| b.1).max().unwrap();
    let grid = ((p as u64 / 2) * fmax + 1) as usize;

    // Per grid point: the full wave and each block's wave.
    let nb = layout.blocks.len();
    let mut mean_full = 0.0f64;
    let mut mean_block = vec![0.0f64; nb];
    for i in 0..grid {
        let x = i as f64 / grid as f64;
        let mut full = Complex64::new(0.0, 0.0);
        let mut parts = vec![Complex64::new(0.0, 0.0); nb];
        for &(f, c) in &coeffs {
            let z = c * e(f as f64 * x);
            full += z;
            let b = layout
                .blocks
                .iter()
                .position(|&(lo, hi)| f >= lo && f <= hi)
                .unwrap();
            parts[b] += z;
        }
        mean_full += full.norm_sqr().powi(p as i32 / 2);
        for (b, z) in parts.iter().enumerate() {
            mean_block[b] += z.norm_sqr().powi(p as i32 / 2);
        }
    }
    mean_full /= grid as f64;
    for v in mean_block.iter_mut() {
        *v /= grid as f64;
    }
    let denom: f64 = mean_block
        .iter()
        .map(|v| v.powf(2.0 / p as f64))
        .sum::<f64>()
        .powf(p as f64 / 2.0);
    Ok(SuperpositionReport {
        ratio: mean_full / denom,
    })
}
