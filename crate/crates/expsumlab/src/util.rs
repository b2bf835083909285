//! Numerical utilities: the unit phase, compensated and deterministic
//! parallel summation, closed-form oscillatory quadrature helpers, log-log
//! fitting, and the quasirandom point generator.

use num_complex::Complex64;
use rayon::prelude::*;

/// e(theta) = exp(2 pi i theta). The argument is reduced to [-1/2, 1/2]
/// before trigonometry so large phases keep full precision relative to the
/// size of their fractional part.
#[inline]
pub fn e(theta: f64) -> Complex64 {
    let r = theta - theta.round();
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub fn new() -> Kahan {
        Kahan::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Complex compensated accumulator.
#[derive(Clone, Copy, Default)]
pub struct KahanC {
    re: Kahan,
    im: Kahan,
}

impl KahanC {
    #[inline]
    pub fn new() -> KahanC {
        KahanC::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

const CHUNK: usize = 1024;

/// Deterministic parallel sum: fixed chunks are reduced in parallel with
/// compensated accumulation, then combined sequentially in index order, so
/// the result is bitwise independent of the worker count.
pub fn par_sum_f64<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Kahan::default();
            let end = ((c + 1) * CHUNK).min(n);
            for i in c * CHUNK..end {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = Kahan::default();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

/// Complex variant of [`par_sum_f64`], same determinism contract.
pub fn par_sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let partials: Vec<Complex64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = KahanC::default();
            let end = ((c + 1) * CHUNK).min(n);
            for i in c * CHUNK..end {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = KahanC::default();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

/// Least-squares slope and intercept of log y against log x.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = num / den;
    (slope, my - slope * mx)
}

/// Composite trapezoid value of the integral of e(delta x) over [a, b] with
/// `points` nodes, in closed form via the Dirichlet kernel. Exact for the
/// trapezoid rule (not for the integral), so step-halving diagnostics see
/// precisely the quadrature being declared.
pub fn trapezoid_phase(delta: f64, a: f64, b: f64, points: usize) -> Complex64 {
    assert!(points >= 2, "trapezoid needs at least two nodes");
    if a == b {
        // Width-zero axis: point evaluation (slice semantics).
        return e(delta * a);
    }
    let h = (b - a) / (points - 1) as f64;
    // sum_{k=0}^{m-1} e(k delta h) = e((m-1) dh / 2) sin(pi m dh) / sin(pi dh)
    let m = points as f64;
    let dh = delta * h;
    let r = dh - dh.round();
    let geo = if r.abs() < 1e-13 {
        // Degenerate kernel: all terms aligned.
        Complex64::new(m, 0.0)
    } else {
        let num = (std::f64::consts::PI * m * r).sin();
        let den = (std::f64::consts::PI * r).sin();
        e((m - 1.0) * dh / 2.0) * (num / den)
    };
    let full = e(delta * a) * geo;
    let ends = (e(delta * a) + e(delta * b)) * 0.5;
    h * (full - ends)
}

/// Additive quasirandom sequence in [0, 1)^4 built on the generalized golden
/// ratio (the unique real root of x^5 = x + 1), with a seed-dependent
/// Cranley-Patterson rotation so distinct seeds give distinct, reproducible
/// point sets.
pub struct QuasiRandom4 {
    state: [f64; 4],
    step: [f64; 4],
}

impl QuasiRandom4 {
    pub fn new(seed: u64) -> Self {
        // Root of x^5 = x + 1.
        let mut phi = 1.0f64;
        for _ in 0..128 {
            phi = (phi + 1.0).powf(0.2);
        }
        let inv = 1.0 / phi;
        let step = [inv, inv * inv, inv * inv * inv, inv * inv * inv * inv];
        // Splitmix-style scramble of the seed into four rotations.
        let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
        let mut rot = [0.0f64; 4];
        for r in rot.iter_mut() {
            z = z.wrapping_add(0x9e3779b97f4a7c15);
            let mut x = z;
            x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
            x ^= x >> 31;
            *r = (x >> 11) as f64 / (1u64 << 53) as f64;
        }
        QuasiRandom4 {
            state: rot,
            step,
        }
    }

    #[inline]
    pub fn next_point(&mut self) -> [f64; 4] {
        for (s, d) in self.state.iter_mut().zip(&self.step) {
            *s += d;
            if *s >= 1.0 {
                *s -= 1.0;
            }
        }
        self.state
    }
}

/// Batch-mean standard error: splits `values` into `batches` equal batches
/// (trailing remainder ignored) and returns (mean, stderr of batch means).
pub fn batch_stderr(values: &[f64], batches: usize) -> (f64, f64) {
    let b = batches.max(2).min(values.len().max(2));
    let per = values.len() / b;
    if per == 0 {
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        return (mean, f64::INFINITY);
    }
    let means: Vec<f64> = (0..b)
        .map(|i| values[i * per..(i + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b as f64 - 1.0);
    (mean, (var / b as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_basics() {
        assert!((e(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((e(0.5) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((e(0.25) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn trapezoid_matches_naive() {
        for &(delta, a, b, m) in &[
            (0.37f64, -1.0f64, 2.0f64, 9usize),
            (4.113, 0.0, 1.0, 33),
            (0.0, -2.0, 5.0, 17),
            (-2.25, 1.5, 1.75, 5),
        ] {
            let got = trapezoid_phase(delta, a, b, m);
            let h = (b - a) / (m - 1) as f64;
            let mut want = Complex64::default();
            for k in 0..m {
                let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
                want += w * e(delta * (a + k as f64 * h));
            }
            want *= h;
            assert!((got - want).norm() < 1e-11, "delta={delta} a={a} b={b} m={m}");
        }
    }

    #[test]
    fn loglog_fit_recovers_power_law() {
        let xs = [2.0f64, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(2.5)).collect();
        let (s, i) = fit_loglog(&xs, &ys);
        assert!((s - 2.5).abs() < 1e-12);
        assert!((i - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn quasirandom_deterministic_and_in_range() {
        let mut a = QuasiRandom4::new(7);
        let mut b = QuasiRandom4::new(7);
        for _ in 0..100 {
            let (x, y) = (a.next_point(), b.next_point());
            assert_eq!(x, y);
            for v in x {
                assert!((0.0..1.0).contains(&v));
            }
        }
    }

    #[test]
    fn parallel_sum_matches_serial() {
        let n = 10_000;
        let serial: f64 = {
            let mut k = Kahan::default();
            for i in 0..n {
                k.add(((i as f64) * 0.37).sin());
            }
            k.value()
        };
        let par = par_sum_f64(n, |i| ((i as f64) * 0.37).sin());
        assert!((serial - par).abs() < 1e-12);
    }
}
