//! Dyadic level-set analysis of the tilted second-derivative combination
//!   f(t) = l1 phi3''(t) + l2 phi4''(t)
//! on the reference window: ball-and-annuli partitions of the attained
//! values, sublevel-set measures, the measure-times-scale product check, and
//! the pair-counting harness for shifted quadratic systems.

use crate::curve::{Curve, REF_WINDOW};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// f(t) = l1 phi3''(t) + l2 phi4''(t).
pub fn f_level(curve: &Curve, l1: i64, l2: i64, t: f64) -> f64 {
    l1 as f64 * curve.phi_deriv_any(3, 2, t) + l2 as f64 * curve.phi_deriv_any(4, 2, t)
}

fn fp_level(curve: &Curve, l1: i64, l2: i64, t: f64) -> f64 {
    l1 as f64 * curve.phi_deriv_any(3, 3, t) + l2 as f64 * curve.phi_deriv_any(4, 3, t)
}

/// Shape of the partition of the values of f over the reference window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// |f'| is bounded below by 2^j / 8: one full-range set at scale j.
    Steep,
    /// A near-critical point forces a ball around f(t0) plus dyadic annuli.
    Critical,
    /// l1 = l2 = 0: f vanishes identically.
    Flat,
}

/// One piece of the partition. For the ball and the annuli the intervals are
/// in value space (one interval for the ball, the two sides of the annulus
/// otherwise); the steep case stores the single attained value range.
#[derive(Debug, Clone)]
pub struct RSet {
    pub s: u32,
    pub intervals: Vec<(f64, f64)>,
    pub ball: bool,
}

#[derive(Debug, Clone)]
pub struct Partition {
    /// Dyadic size of the tilt: j = floor(log2 max(|l1|, |l2|, 1)).
    pub j: u32,
    pub case: CaseTag,
    /// Minimizer of |f'| over the reference window.
    pub t0: f64,
    pub f_t0: f64,
    pub fp_t0: f64,
    pub sets: Vec<RSet>,
    center: f64,
    ball_radius: f64,
    /// Outer radius of the top annulus (extended to the attained values).
    top_edge: f64,
    /// Padded attained value range.
    range: (f64, f64),
    ball_s: u32,
}

impl Partition {
    /// The scale index of the set containing value v, if v is covered.
    pub fn locate(&self, v: f64) -> Option<u32> {
        match self.case {
            CaseTag::Flat => (v.abs() <= self.ball_radius).then_some(0),
            CaseTag::Steep => (v >= self.range.0 && v <= self.range.1).then_some(self.j),
            CaseTag::Critical => {
                let d = (v - self.center).abs();
                if d <= self.ball_radius {
                    return Some(self.ball_s);
                }
                for s in self.ball_s + 1..=self.j {
                    let outer = if s == self.j {
                        self.top_edge
                    } else {
                         2.0f64.powi(s as i32)
                    };
                    if d <= outer {
                        return Some(s);
                    }
                }
                None
            }
        }
    }

    /// Like [`Partition::locate`], with out-of-range values clamped to the
    /// nearest covered scale instead of rejected.
    pub fn locate_clamped(&self, v: f64) -> u32 {
        self.locate(v).unwrap_or(match self.case {
            CaseTag::Flat => 0,
            _ => self.j,
        })
    }
}

/// Build the dyadic partition of the values of f = l1 phi3'' + l2 phi4''
/// over the reference window.
pub fn build_partition(curve: &Curve, l1: i64, l2: i64) -> Result<Partition> {
    let j = (l1.unsigned_abs().max(l2.unsigned_abs()).max(1)).ilog2();
    if l1 == 0 && l2 == 0 {
        return Ok(Partition {
            j: 0,
            case: CaseTag::Flat,
            t0: REF_WINDOW.0,
            f_t0: 0.0,
            fp_t0: 0.0,
            sets: vec![RSet {
                s: 0,
                intervals: vec![(-1.0, 1.0)],
                ball: true,
            }],
            center: 0.0,
            ball_radius: 1.0,
            top_edge: 1.0,
            range: (-1.0, 1.0),
            ball_s: 0,
        });
    }

    let (lo, hi) = REF_WINDOW;
    const GRID: usize = 8192;
    let h = (hi - lo) / GRID as f64;

    // Attained range with a derivative-based pad so values between grid
    // nodes are still covered, and the |f'| minimizer.
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    let mut fp_max = 0.0f64;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=GRID {
        let t = lo + h * i as f64;
        let f = f_level(curve, l1, l2, t);
        let fp = fp_level(curve, l1, l2, t);
        fmin = fmin.min(f);
        fmax = fmax.max(f);
        fp_max = fp_max.max(fp.abs());
        if fp.abs() < best.0 {
            best = (fp.abs(), t);
        }
        if !f.is_finite() || !fp.is_finite() {
            return Err(Error::Degenerate(format!(
                "f is not finite at t = {t} for (l1, l2) = ({l1}, {l2})"
            )));
        }
    }
    // Ternary refinement of the minimizer inside its grid bracket.
    let mut a = (best.1 - h).max(lo);
    let mut b = (best.1 + h).min(hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if fp_level(curve, l1, l2, m1).abs() <= fp_level(curve, l1, l2, m2).abs() {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t0 = 0.5 * (a + b);
    let f_t0 = f_level(curve, l1, l2, t0);
    let fp_t0 = fp_level(curve, l1, l2, t0);

    let pad = 2.0 * h * (fp_max + 1.0);
    let range = (fmin - pad, fmax + pad);
    let scale_j = 2.0f64.powi(j as i32);

    if fp_t0.abs() >= scale_j / 8.0 {
        return Ok(Partition {
            j,
            case: CaseTag::Steep,
            t0,
            f_t0,
            fp_t0,
            sets: vec![RSet {
                s: j,
                intervals: vec![range],
                ball: false,
            }],
            center: f_t0,
            ball_radius: 0.0,
            top_edge: 0.0,
            range,
            ball_s: j,
        });
    }

    // Critical case: ball at the largest dyadic scale below
    // 8 max(f'(t0)^2 / 2^j, 1), clamped to j, then annuli out to scale j,
    // the last one stretched to the furthest attained value.
    let cap = 8.0 * (fp_t0 * fp_t0 / scale_j).max(1.0);
    let ball_s = (cap.log2().floor() as u32).min(j);
    let dmax = (range.0 - f_t0).abs().max((range.1 - f_t0).abs());

    let mut sets = Vec::new();
    let ball_radius = if ball_s >= j {
        2.0f64.powi(ball_s as i32).max(dmax)
    } else {
        2.0f64.powi(ball_s as i32)
    };
    sets.push(RSet {
        s: ball_s,
        intervals: vec![(f_t0 - ball_radius, f_t0 + ball_radius)],
        ball: true,
    });
    let mut top_edge = ball_radius;
    for s in ball_s + 1..=j {
        let inner = 2.0f64.powi(s as i32 - 1);
        let outer = if s == j {
            2.0f64.powi(s as i32).max(dmax)
        } else {
            2.0f64.powi(s as i32)
        };
        top_edge = outer;
        sets.push(RSet {
            s,
            intervals: vec![(f_t0 - outer, f_t0 - inner), (f_t0 + inner, f_t0 + outer)],
            ball: false,
        });
    }

    Ok(Partition {
        j,
        case: CaseTag::Critical,
        t0,
        f_t0,
        fp_t0,
        sets,
        center: f_t0,
        ball_radius,
        top_edge,
        range,
        ball_s,
    })
}

/// Measure of { t in the reference window : |f(t) - v| <= halfwidth } by
/// midpoint sampling. The grid must resolve the window: at least 10_000
/// points are required.
pub fn preimage_measure(
    curve: &Curve,
    l1: i64,
    l2: i64,
    v: f64,
    halfwidth: f64,
    grid: usize,
) -> Result<f64> {
    if grid < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "preimage grid {grid} is below the resolution floor of 10000"
        )));
    }
    if !halfwidth.is_finite() || halfwidth <= 0.0 {
        return Err(Error::InvalidArgument("window halfwidth must be positive".into()));
    }
    let (lo, hi) = REF_WINDOW;
    let h = (hi - lo) / grid as f64;
    let mut hits = 0u64;
    for i in 0..grid {
        let t = lo + h * (i as f64 + 0.5);
        if (f_level(curve, l1, l2, t) - v).abs() <= halfwidth {
            hits += 1;
        }
    }
    Ok(hits as f64 / grid as f64 * (hi - lo))
}

/// Report of the seeded measure-times-scale product check.
#[derive(Debug, Clone, Copy)]
pub struct Lemma42Report {
    /// Largest measure{|f - v| <= 1} * sqrt(2^(j+s)) observed.
    pub max_product: f64,
    /// (l1, l2, s, v) achieving the maximum.
    pub worst: (i64, i64, u32, f64),
    pub trials: u64,
}

/// Sample random tilts with 2^j <= 2^10 and random attained levels; the
/// unit-window sublevel measure times sqrt(2^(j+s)) must stay under the
/// documented cap (32; the steep-case hand value is 16).
pub fn verify_lemma42(
    curve: &Curve,
    trials: u64,
    levels_per_trial: u64,
    seed: u64,
) -> Result<Lemma42Report> {
    if trials == 0 || levels_per_trial == 0 {
        return Err(Error::InvalidArgument(
            "the product check needs at least one trial and one level".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Lemma42Report {
        max_product: 0.0,
        worst: (0, 0, 0, 0.0),
        trials,
    };
    let (lo, hi) = REF_WINDOW;
    for _ in 0..trials {
        let l1 = rng.gen_range(-1024i64..=1024);
        let l2 = rng.gen_range(-1024i64..=1024);
        let p = build_partition(curve, l1, l2)?;
        for _ in 0..levels_per_trial {
            let t = lo + (hi - lo) * rng.gen::<f64>();
            let v = f_level(curve, l1, l2, t);
            let s = p.locate_clamped(v);
            let measure = preimage_measure(curve, l1, l2, v, 1.0, 20_000)?;
            let product = measure * ((1u64 << (p.j + s)) as f64).sqrt();
            if product > report.max_product {
                report.max_product = product;
                report.worst = (l1, l2, s, v);
            }
        }
    }
    Ok(report)
}

/// Which shifted quadratic system the pair counter histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemTag {
    /// a(h) = p + (l1/2) phi3''(h/n) + (l2/2) phi4''(h/n), h over [1, n].
    TwoParameter,
    /// Same values, h restricted to [n/2, n].
    HalfRange,
    /// a(h) = p + l1 phi3''(h/n) / 2 with h over [n/2, n].
    SingleTilt,
}

#[derive(Debug, Clone, Copy)]
pub struct PairCountReport {
    /// Largest per-cell pair count (cell population squared).
    pub max_count: u64,
    /// Total pairs over all cells.
    pub total_pairs: u64,
    pub occupied_cells: u64,
    /// Dyadic size of the tilt.
    pub j: u32,
    /// The flat counting cap 8 (n / (step 2^j))^2.
    pub cell_bound: f64,
    /// Largest count * 2^j * 2^((s1+s2)/2) / (cells-per-window normalizer)^2
    /// over occupied cells, with s the located scale of the cell center.
    pub max_refined_ratio: f64,
}

/// Histogram the values a(h) over multiples of `step` into cells of width
/// 2 tol and count coincident pairs per cell, reporting both the flat cap
/// and the annulus-refined ratio.
#[allow(clippy::too_many_arguments)]
pub fn count_pairs(
    curve: &Curve,
    n: u64,
    step: u64,
    tag: SystemTag,
    p: f64,
    l1: i64,
    l2: i64,
    tol: f64,
) -> Result<PairCountReport> {
    if n == 0 || step == 0 || step > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= step <= n, got step = {step}, n = {n}"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument("cell tolerance must be positive".into()));
    }
    let part = build_partition(curve, l1, if tag == SystemTag::SingleTilt { 0 } else { l2 })?;
    let nf = n as f64;
    let h_lo = match tag {
        SystemTag::TwoParameter => step,
        SystemTag::HalfRange | SystemTag::SingleTilt => {
            // first multiple of step at or above n/2
            let lo = n / 2;
            lo.next_multiple_of(step)
        }
    };
    let mut cells: BTreeMap<i64, u64> = BTreeMap::new();
    let mut h = h_lo;
    let mut h_count = 0u64;
    while h <= n {
        let t = h as f64 / nf;
        let a = match tag {
            SystemTag::TwoParameter | SystemTag::HalfRange => {
                p + 0.5 * l1 as f64 * curve.phi_deriv_any(3, 2, t)
                    + 0.5 * l2 as f64 * curve.phi_deriv_any(4, 2, t)
            }
            SystemTag::SingleTilt => p + 0.5 * l1 as f64 * curve.phi_deriv_any(3, 2, t),
        };
        if !a.is_finite() {
            return Err(Error::Degenerate(format!("a(h) not finite at h = {h}")));
        }
        let bin = (a / (2.0 * tol)).floor() as i64;
        *cells.entry(bin).or_insert(0) += 1;
        h_count += 1;
        h += step;
    }
    if h_count == 0 {
        return Err(Error::Range("no multiples of step in the range".into()));
    }

    let scale_j = 2.0f64.powi(part.j as i32);
    let cell_bound = 8.0 * (nf / (step as f64 * scale_j)).powi(2);
    // The histogram window is 2 tol wide in a, hence 4 tol wide in
    // v = 2 (a - p); the refined normalizer counts how many h a width-one
    // value window could hold, scaled by the window actually used.
    let norm = (nf / step as f64) * (4.0 * tol).max(1.0);

    let mut max_count = 0u64;
    let mut total = 0u64;
    let mut max_ratio = 0.0f64;
    for (bin, c) in &cells {
        let pairs = c * c;
        max_count = max_count.max(pairs);
        total += pairs;
        let a_center = (*bin as f64 + 0.5) * 2.0 * tol;
        let s = part.locate_clamped(2.0 * (a_center - p));
        let ratio = pairs as f64 * scale_j * 2.0f64.powf(s as f64) / (norm * norm);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(PairCountReport {
        max_count,
        total_pairs: total,
        occupied_cells: cells.len() as u64,
        j: part.j,
        cell_bound,
        max_refined_ratio: max_ratio,
    })
}
