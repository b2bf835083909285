//! Curve families (phi3, phi4), their nondegeneracy constants, the two-point
//! Jacobian, and parabolic block rescaling.
//!
//! A curve is the quadruple (t, t^2, phi3(t), phi4(t)) presented through its
//! last two components; the first two are fixed by the phase conventions in
//! [`crate::expsum`]. Nondegeneracy on the reference window [1/2, 1] is
//! measured by four constants:
//!   a1: max over k of the C^4 seminorm sum_(order 1..4) max |phi_k^(order)|,
//!   a2, a3: two-sided bounds for the pair determinant
//!           phi3'''(t) phi4''''(s) - phi3''''(t) phi4'''(s),
//!   a4: a floor for |phi3'''|.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Reference window on which condition constants are measured.
pub const REF_WINDOW: (f64, f64) = (0.5, 1.0);

/// Relative half-width threshold above which truncated-series rescaling of a
/// non-polynomial family is refused: blocks with 2m/n0 at or beyond this are
/// not "short" enough for certified truncation.
pub const RESCALE_WIDTH_LIMIT: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// phi3 = t^3, phi4 = t^4.
    Moment,
    /// phi3 = t^a, phi4 = t^b.
    Power { a: f64, b: f64 },
    /// Power series about `center`: phi_k = sum_j coeffs[j] (t - center)^j,
    /// valid on an explicit domain. Produced by block rescaling and usable
    /// directly for bespoke experiments.
    Custom {
        center: f64,
        coeffs3: Vec<f64>,
        coeffs4: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub family: Family,
    /// Natural evaluation domain (closed); evaluation outside is an error.
    pub domain: (f64, f64),
}

/// Condition constants measured on a grid over the reference window.
#[derive(Debug, Clone, Copy)]
pub struct CurveConditionReport {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub grid: usize,
}

/// Parent-curve constants frozen at a single base point, the comparison
/// target for rescaled blocks.
#[derive(Debug, Clone, Copy)]
pub struct LocalConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

/// The affine-plus-dilation data that carries a point x for the parent sum
/// to the point y for the rescaled sum, together with the rescaled curve.
#[derive(Debug, Clone)]
pub struct BlockRescaling {
    pub n: u64,
    pub n0: u64,
    pub m: u64,
    /// Base point n0/n of the block.
    pub r: f64,
    /// y1 = x1 + 2 n0 x2 + b x3 + e x4.
    pub b: f64,
    pub e: f64,
    /// y2 = x2 + c x3 + f x4.
    pub c: f64,
    pub f: f64,
    /// phi4'''(r) / phi3'''(r), the shear that removes the cubic coupling.
    pub rho: f64,
    /// Rescaled curve on domain [0, 2] with phi3~ monic-normalized data.
    pub curve: Curve,
    /// Series lengths actually kept (diagnostics).
    pub terms3: usize,
    pub terms4: usize,
    /// Parent derivatives phi_k^(1..4)(r), frozen at construction.
    parent_derivs: [[f64; 4]; 2],
}

impl Curve {
    pub fn moment() -> Curve {
        Curve {
            family: Family::Moment,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn power(a: f64, b: f64) -> Curve {
        Curve {
            family: Family::Power { a, b },
            domain: (0.0, f64::INFINITY),
        }
    }

    pub fn custom(center: f64, coeffs3: Vec<f64>, coeffs4: Vec<f64>, domain: (f64, f64)) -> Curve {
        Curve {
            family: Family::Custom {
                center,
                coeffs3,
                coeffs4,
            },
            domain,
        }
    }

    /// Derivative ladder without domain checks; `order` unbounded. Internal:
    /// the public cap lives in [`Curve::eval_phi`].
    pub(crate) fn phi_deriv_any(&self, k: u8, order: usize, t: f64) -> f64 {
        debug_assert!(k == 3 || k == 4);
        match &self.family {
            Family::Moment => {
                let p = if k == 3 { 3usize } else { 4 };
                if order > p {
                    return 0.0;
                }
                // p! / (p - order)! * t^(p - order)
                let mut c = 1.0;
                for j in 0..order {
                    c *= (p - j) as f64;
                }
                c * t.powi((p - order) as i32)
            }
            Family::Power { a, b } => {
                let expo = if k == 3 { *a } else { *b };
                let mut c = 1.0;
                for j in 0..order {
                    c *= expo - j as f64;
                }
                if c == 0.0 {
                    return 0.0;
                }
                c * t.powf(expo - order as f64)
            }
            Family::Custom {
                center,
                coeffs3,
                coeffs4,
            } => {
                let coeffs = if k == 3 { coeffs3 } else { coeffs4 };
                let u = t - center;
                // Horner over the differentiated series.
                let mut acc = 0.0f64;
                for j in (order..coeffs.len()).rev() {
                    let mut fall = 1.0;
                    for i in 0..order {
                        fall *= (j - i) as f64;
                    }
                    acc = acc * u + coeffs[j] * fall;
                }
                acc
            }
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.domain.0 || t > self.domain.1 {
            return Err(Error::Domain(format!(
                "t = {t} outside evaluation domain [{}, {}]",
                self.domain.0, self.domain.1
            )));
        }
        Ok(())
    }

    /// phi_k^(order)(t) for k in {3, 4} and order up to 4, with domain checks.
    pub fn eval_phi(&self, k: u8, order: u8, t: f64) -> Result<f64> {
        if k != 3 && k != 4 {
            return Err(Error::InvalidArgument(format!(
                "k = {k}: the curve has components phi3 and phi4"
            )));
        }
        if order > 4 {
            return Err(Error::Unsupported(format!(
                "derivative order {order} > 4 is outside the public surface"
            )));
        }
        self.check_domain(t)?;
        let v = self.phi_deriv_any(k, order as usize, t);
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "phi{k}^({order})({t}) is not finite"
            )));
        }
        Ok(v)
    }

    /// The pair determinant phi3'''(t) phi4''''(s) - phi3''''(t) phi4'''(s).
    /// Only the debug-build mean-value bracket consumes it.
    #[cfg(debug_assertions)]
    fn pair_det(&self, t: f64, s: f64) -> f64 {
        self.phi_deriv_any(3, 3, t) * self.phi_deriv_any(4, 4, s)
            - self.phi_deriv_any(3, 4, t) * self.phi_deriv_any(4, 3, s)
    }

    /// Condition constants on the reference window, measured on a `grid`
    /// point-per-axis lattice (endpoints included). Maxima are reported from
    /// below and minima from above, so nested refinements move the report
    /// monotonically toward the true constants.
    pub fn verify_conditions(&self, grid: usize) -> Result<CurveConditionReport> {
        if grid < 2 {
            return Err(Error::InvalidArgument(
                "condition grid needs at least 2 points".into(),
            ));
        }
        let (lo, hi) = REF_WINDOW;
        let node = |i: usize| lo + (hi - lo) * i as f64 / (grid - 1) as f64;

        let mut a1 = 0.0f64;
        for k in [3u8, 4] {
            let mut sum = 0.0;
            for order in 1..=4usize {
                let mut mx = 0.0f64;
                for i in 0..grid {
                    mx = mx.max(self.phi_deriv_any(k, order, node(i)).abs());
                }
                sum += mx;
            }
            a1 = a1.max(sum);
        }

        let mut a4 = f64::INFINITY;
        for i in 0..grid {
            a4 = a4.min(self.phi_deriv_any(3, 3, node(i)).abs());
        }

        // Pair determinant over the full (t, s) square.
        let rows: Vec<(f64, f64)> = (0..grid)
            .into_par_iter()
            .map(|i| {
                let t = node(i);
                let d3 = self.phi_deriv_any(3, 3, t);
                let d4 = self.phi_deriv_any(3, 4, t);
                let mut lo_v = f64::INFINITY;
                let mut hi_v = 0.0f64;
                for j in 0..grid {
                    let s = node(j);
                    let det = (d3 * self.phi_deriv_any(4, 4, s)
                        - d4 * self.phi_deriv_any(4, 3, s))
                    .abs();
                    lo_v = lo_v.min(det);
                    hi_v = hi_v.max(det);
                }
                (lo_v, hi_v)
            })
            .collect();
        let a2 = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let a3 = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);

        for v in [a1, a2, a3, a4] {
            if !v.is_finite() {
                return Err(Error::Degenerate(
                    "condition constants are not finite on the reference window".into(),
                ));
            }
        }
        Ok(CurveConditionReport {
            a1,
            a2,
            a3,
            a4,
            grid,
        })
    }

    /// Determinant of the first and second derivative rows of the
    /// renormalized curve u -> (u, u^2/n, n phi3(u/n), n phi4(u/n)) at the
    /// confluent pair configuration (t, t, s, s). Row order:
    /// [psi'(nt), psi'(ns), psi''(nt), psi''(ns)].
    pub fn jacobian_psi(&self, t: f64, s: f64, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("jacobian needs n >= 1".into()));
        }
        self.check_domain(t)?;
        self.check_domain(s)?;
        if t == s {
            return Ok(0.0);
        }
        let nf = n as f64;
        let d1 = |t: f64| {
            [
                1.0,
                2.0 * t,
                self.phi_deriv_any(3, 1, t),
                self.phi_deriv_any(4, 1, t),
            ]
        };
        let d2 = |t: f64| {
            [
                0.0,
                2.0 / nf,
                self.phi_deriv_any(3, 2, t) / nf,
                self.phi_deriv_any(4, 2, t) / nf,
            ]
        };
        let m = [d1(t), d1(s), d2(t), d2(s)];
        let det = det4(&m);

        // Mean-value sanity: the normalized determinant is an average of
        // pair determinants at intermediate points. When the sampled pair
        // determinants share one sign, the normalized value must sit inside
        // their bracket (factor-4 margin for the intermediate-point drift);
        // with mixed signs cancellation is legitimate and nothing is checked.
        #[cfg(debug_assertions)]
        {
            let norm = (-6.0 * det * nf * nf / (t - s).powi(4)).abs();
            let d = [
                self.pair_det(t, s),
                self.pair_det(s, t),
                self.pair_det(t, t),
                self.pair_det(s, s),
            ];
            let one_sign = d.iter().all(|v| *v > 0.0) || d.iter().all(|v| *v < 0.0);
            if one_sign {
                let lo = d.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min) / 4.0;
                let hi = d.iter().map(|v| v.abs()).fold(0.0f64, f64::max) * 4.0;
                debug_assert!(
                    norm >= lo * (1.0 - 1e-9) && norm <= hi * (1.0 + 1e-9),
                    "normalized jacobian {norm} outside local bracket [{lo}, {hi}]"
                );
            }
        }
        Ok(det)
    }

    /// Rescale the block n0 + [m, 2m] of a scale-n sum to a scale-m sum over
    /// a rescaled curve on [0, 2]. Requires the block to lie in the right
    /// half [n/2, n] and, for non-polynomial families, to be short enough
    /// for certified series truncation.
    pub fn rescale_block(&self, n: u64, n0: u64, m: u64) -> Result<BlockRescaling> {
        if n0 == 0 || 2 * n0 < n {
            return Err(Error::InvalidArgument(format!(
                "block base n0 = {n0} must lie in [n/2, n] for n = {n}"
            )));
        }
        if n0 + 2 * m > n {
            return Err(Error::Range(format!(
                "block n0 + [m, 2m] = [{}, {}] reaches past n = {n}",
                n0 + m,
                n0 + 2 * m
            )));
        }
        self.rescale_block_unchecked(n, n0, m)
    }

    /// Block rescaling without the position checks, for diagnostics such as
    /// the degenerate whole-range block (n0 = 0, m = n). The series and
    /// width guards still apply.
    pub fn rescale_block_unchecked(&self, n: u64, n0: u64, m: u64) -> Result<BlockRescaling> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("rescaling needs n, m >= 1".into()));
        }
        let finite_series = matches!(self.family, Family::Moment);
        if !finite_series && n0 > 0 && 2.0 * m as f64 / n0 as f64 >= RESCALE_WIDTH_LIMIT {
            return Err(Error::Precision(format!(
                "block half-width 2m/n0 = {} is too large for certified truncation",
                2.0 * m as f64 / n0 as f64
            )));
        }
        let nf = n as f64;
        let r = n0 as f64 / nf;
        let lam = m as f64 / nf;

        let p3_3 = self.phi_deriv_any(3, 3, r);
        if !p3_3.is_finite() || p3_3.abs() < 1e-12 {
            return Err(Error::Degenerate(format!(
                "phi3'''({r}) = {p3_3}: the cubic normalization collapses"
            )));
        }
        let rho = self.phi_deriv_any(4, 3, r) / p3_3;
        if !rho.is_finite() {
            return Err(Error::Degenerate("rescaling shear is not finite".into()));
        }

        // phi3~: sum_(k>=3) phi3^(k)(r) lam^(k-3) T^k / k!
        // phi4~: sum_(k>=4) (phi4^(k)(r) - rho phi3^(k)(r)) lam^(k-4) T^k / k!
        const MAX_TERMS: usize = 64;
        const TAIL_TOL: f64 = 1e-15;
        let mut coeffs3 = vec![0.0f64; 4];
        let mut coeffs4 = vec![0.0f64; 5];
        let mut fact = 6.0f64; // 3!
        let mut scale3 = 1.0f64; // lam^(k-3)
        coeffs3[3] = p3_3 / fact;
        let mut sup3 = coeffs3[3].abs() * 8.0; // |c3| 2^3
        let mut terms3 = 1usize;
        let mut converged3 = finite_series;
        for k in 4..=MAX_TERMS {
            fact *= k as f64;
            scale3 *= lam;
            let c = self.phi_deriv_any(3, k, r) * scale3 / fact;
            let contrib = c.abs() * 2.0f64.powi(k as i32);
            if finite_series && k > 4 {
                break;
            }
            if coeffs3.len() <= k {
                coeffs3.resize(k + 1, 0.0);
            }
            coeffs3[k] = c;
            terms3 += 1;
            sup3 = sup3.max(contrib);
            if !finite_series && contrib < TAIL_TOL * sup3.max(1.0) {
                converged3 = true;
                break;
            }
        }
        let mut fact4 = 24.0f64; // 4!
        let mut scale4 = 1.0f64;
        let c40 = (self.phi_deriv_any(4, 4, r) - rho * self.phi_deriv_any(3, 4, r)) / fact4;
        coeffs4[4] = c40;
        let mut sup4 = c40.abs() * 16.0;
        let mut terms4 = 1usize;
        let mut converged4 = finite_series;
        for k in 5..=MAX_TERMS {
            fact4 *= k as f64;
            scale4 *= lam;
            let raw = self.phi_deriv_any(4, k, r) - rho * self.phi_deriv_any(3, k, r);
            let c = raw * scale4 / fact4;
            let contrib = c.abs() * 2.0f64.powi(k as i32);
            if finite_series {
                break;
            }
            if coeffs4.len() <= k {
                coeffs4.resize(k + 1, 0.0);
            }
            coeffs4[k] = c;
            terms4 += 1;
            sup4 = sup4.max(contrib);
            if contrib < TAIL_TOL * sup4.max(1.0) {
                converged4 = true;
                break;
            }
        }
        if !(converged3 && converged4) {
            return Err(Error::Precision(
                "rescaling series did not reach the truncation tolerance".into(),
            ));
        }

        let nn = nf * nf;
        let parent_derivs = [
            [
                self.phi_deriv_any(3, 1, r),
                self.phi_deriv_any(3, 2, r),
                self.phi_deriv_any(3, 3, r),
                self.phi_deriv_any(3, 4, r),
            ],
            [
                self.phi_deriv_any(4, 1, r),
                self.phi_deriv_any(4, 2, r),
                self.phi_deriv_any(4, 3, r),
                self.phi_deriv_any(4, 4, r),
            ],
        ];
        Ok(BlockRescaling {
            n,
            n0,
            m,
            r,
            b: parent_derivs[0][0] / nf,
            e: parent_derivs[1][0] / nf,
            c: parent_derivs[0][1] / (2.0 * nn),
            f: parent_derivs[1][1] / (2.0 * nn),
            rho,
            curve: Curve::custom(0.0, coeffs3, coeffs4, (0.0, 2.0)),
            terms3,
            terms4,
            parent_derivs,
        })
    }
}

impl BlockRescaling {
    /// Carry a point for the parent sum to the point for the rescaled sum;
    /// the moduli of the two sums agree.
    pub fn map_point(&self, x: crate::expsum::Point4) -> crate::expsum::Point4 {
        let lam = self.m as f64 / self.n as f64;
        crate::expsum::Point4::new(
            x.x1 + 2.0 * self.n0 as f64 * x.x2 + self.b * x.x3 + self.e * x.x4,
            x.x2 + self.c * x.x3 + self.f * x.x4,
            lam.powi(3) * (x.x3 + self.rho * x.x4),
            lam.powi(4) * x.x4,
        )
    }

    /// Parent-curve condition constants frozen at the block base point.
    pub fn parent_local_constants(&self) -> LocalConstants {
        let [p3, p4] = self.parent_derivs;
        let sum3: f64 = p3.iter().map(|v| v.abs()).sum();
        let sum4: f64 = p4.iter().map(|v| v.abs()).sum();
        let det = (p3[2] * p4[3] - p3[3] * p4[2]).abs();
        LocalConstants {
            a1: sum3.max(sum4),
            a2: det,
            a3: det,
            a4: p3[2].abs(),
        }
    }
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    // Cofactor expansion along the first column (rows 3, 4 start with 0).
    let minor = |r0: usize, r1: usize, r2: usize| {
        let a = m[r0];
        let b = m[r1];
        let c = m[r2];
        a[1] * (b[2] * c[3] - b[3] * c[2]) - a[2] * (b[1] * c[3] - b[3] * c[1])
            + a[3] * (b[1] * c[2] - b[2] * c[1])
    };
    m[0][0] * minor(1, 2, 3) - m[1][0] * minor(0, 2, 3) + m[2][0] * minor(0, 1, 3)
        - m[3][0] * minor(0, 1, 2)
}
