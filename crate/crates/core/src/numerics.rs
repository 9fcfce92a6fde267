//! Low-level numerical kernels shared by the rest of the crate: adaptive
//! Gauss–Kronrod quadrature, cumulative trapezoid integration, a real cubic
//! solver and a seeded random stream.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

/// Default relative tolerance for moment integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Default absolute tolerance for moment integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-14;
/// Maximum number of bisections performed by [`integrate_adaptive`].
pub const DEFAULT_SUBDIVISION_LIMIT: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error(
        "adaptive quadrature did not converge after {subdivisions} subdivisions \
         (best estimate {} ± {})",
        best.value,
        best.abs_error
    )]
    NoConvergence { best: QuadResult, subdivisions: usize },
    #[error("cumulative integral needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("abscissae must be strictly increasing (violated at index {index})")]
    NonMonotone { index: usize },
    #[error("leading cubic coefficient is zero")]
    DegenerateCubic,
}

/// A finite integration interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, NumericsError> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self { a, b })
        } else {
            Err(NumericsError::InvalidInterval { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

// 21-point Kronrod abscissae and weights with the embedded 10-point Gauss
// weights (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_768_919_290,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One Gauss–Kronrod 21 panel. Returns (integral, error estimate, whether
/// the estimate sits at the roundoff floor `50 ε ∫|f|`).
pub(crate) fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let mut at_floor = false;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let floor = 50.0 * f64::EPSILON * res_abs;
        if err <= floor {
            err = floor;
            at_floor = true;
        }
    }
    (value, err, at_floor)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod (21 point) quadrature.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate drops below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    iv: Interval,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult, NumericsError> {
    integrate_adaptive_with_limit(f, iv, rel_tol, abs_tol, DEFAULT_SUBDIVISION_LIMIT)
}

pub fn integrate_adaptive_with_limit<F: Fn(f64) -> f64>(
    f: F,
    iv: Interval,
    rel_tol: f64,
    abs_tol: f64,
    limit: usize,
) -> Result<QuadResult, NumericsError> {
    let (v0, e0, floor0) = gk21(&f, iv.a, iv.b);
    let mut evaluations = 21;
    let mut total = v0;
    let mut total_err = e0;
    let mut heap = BinaryHeap::new();
    // Panels whose error cannot shrink further (roundoff floor, or too narrow
    // to split) are parked: their error still counts but they are not split.
    let mut frozen_err = 0.0;
    if floor0 {
        frozen_err = e0;
    } else {
        heap.push(Panel {
            a: iv.a,
            b: iv.b,
            value: v0,
            err: e0,
        });
    }
    let mut subdivisions = 0;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || subdivisions >= limit {
            if subdivisions >= limit {
                heap.push(worst);
                let best = QuadResult {
                    value: total,
                    abs_error: total_err,
                    evaluations,
                };
                return Err(NumericsError::NoConvergence { best, subdivisions });
            }
            frozen_err += worst.err;
            total_err = frozen_err + heap.iter().map(|p| p.err).sum::<f64>();
            continue;
        }
        let (v1, e1, floor1) = gk21(&f, worst.a, mid);
        let (v2, e2, floor2) = gk21(&f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        total += v1 + v2 - worst.value;
        for (a, b, value, err, at_floor) in [(worst.a, mid, v1, e1, floor1), (mid, worst.b, v2, e2, floor2)] {
            if at_floor {
                frozen_err += err;
            } else {
                heap.push(Panel { a, b, value, err });
            }
        }
        total_err = frozen_err + heap.iter().map(|p| p.err).sum::<f64>();
    }
    let value = total;
    Ok(QuadResult {
        value,
        abs_error: total_err,
        evaluations,
    })
}

/// Cumulative trapezoid integral `F(x_i) = ∫_{x_0}^{x_i} f`, with `F(x_0) = 0`.
pub fn cumulative_integral(xs: &[f64], fs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if xs.len() < 2 || fs.len() != xs.len() {
        return Err(NumericsError::TooFewSamples(xs.len().min(fs.len())));
    }
    let mut out = Vec::with_capacity(xs.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 1..xs.len() {
        let h = xs[i] - xs[i - 1];
        if h.is_nan() || h <= 0.0 {
            return Err(NumericsError::NonMonotone { index: i });
        }
        acc += 0.5 * h * (fs[i] + fs[i - 1]);
        out.push(acc);
    }
    Ok(out)
}

/// A real root and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// A complex root `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRoot {
    pub re: f64,
    pub im: f64,
}

const CUBIC_DEGENERACY_TOL: f64 = 1e-12;

enum CubicShape {
    Triple(f64),
    /// (simple, double)
    Double(f64, f64),
    Distinct([f64; 3]),
    /// real root and complex pair `re ± i·im`
    OneReal(f64, f64, f64),
}

fn horner(c: &[f64; 4], z: f64) -> f64 {
    ((c[0] * z + c[1]) * z + c[2]) * z + c[3]
}

fn polish(c: &[f64; 4], mut z: f64) -> f64 {
    for _ in 0..3 {
        let p = horner(c, z);
        let dp = (3.0 * c[0] * z + 2.0 * c[1]) * z + c[2];
        if dp == 0.0 || p == 0.0 {
            break;
        }
        let next = z - p / dp;
        if horner(c, next).abs() < p.abs() {
            z = next;
        } else {
            break;
        }
    }
    z
}

fn classify_cubic(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<CubicShape, NumericsError> {
    if a3 == 0.0 {
        return Err(NumericsError::DegenerateCubic);
    }
    let b = a2 / a3;
    let c = a1 / a3;
    let d = a0 / a3;
    let shift = -b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let scale = (b.abs() / 3.0)
        .max(c.abs().sqrt())
        .max(d.abs().cbrt());
    let tol = CUBIC_DEGENERACY_TOL;
    if (p == 0.0 && q == 0.0)
        || (p.abs() <= tol * scale * scale && q.abs() <= tol * scale * scale * scale)
    {
        return Ok(CubicShape::Triple(shift));
    }
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let disc_scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
    if disc.abs() <= tol * disc_scale {
        let simple = 3.0 * q / p;
        let double = -1.5 * q / p;
        return Ok(CubicShape::Double(simple + shift, double + shift));
    }
    if disc > 0.0 {
        // p < 0 here
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift;
        }
        Ok(CubicShape::Distinct(roots))
    } else {
        let sq = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let u = (-0.5 * q - q.signum() * sq).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let t = u + v;
        Ok(CubicShape::OneReal(
            t + shift,
            -0.5 * t + shift,
            0.5 * 3f64.sqrt() * (u - v).abs(),
        ))
    }
}

/// Real roots of `a3 z³ + a2 z² + a1 z + a0`, sorted, with multiplicities.
pub fn solve_cubic_real(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<Vec<RealRoot>, NumericsError> {
    let coeffs = [a3, a2, a1, a0];
    let single = |v: f64| RealRoot {
        value: v,
        multiplicity: 1,
    };
    let mut roots = match classify_cubic(a3, a2, a1, a0)? {
        CubicShape::Triple(z) => vec![RealRoot {
            value: z,
            multiplicity: 3,
        }],
        CubicShape::Double(s, d) => vec![
            single(polish(&coeffs, s)),
            RealRoot {
                value: d,
                multiplicity: 2,
            },
        ],
        CubicShape::Distinct(zs) => zs.iter().map(|&z| single(polish(&coeffs, z))).collect(),
        CubicShape::OneReal(z, _, _) => vec![single(polish(&coeffs, z))],
    };
    roots.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(roots)
}

/// All three roots of the cubic, real ones with `im == 0`, sorted by real part.
pub fn cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<[ComplexRoot; 3], NumericsError> {
    let coeffs = [a3, a2, a1, a0];
    let real = |re: f64| ComplexRoot { re, im: 0.0 };
    let mut roots = match classify_cubic(a3, a2, a1, a0)? {
        CubicShape::Triple(z) => [real(z); 3],
        CubicShape::Double(s, d) => [real(polish(&coeffs, s)), real(d), real(d)],
        CubicShape::Distinct(zs) => zs.map(|z| real(polish(&coeffs, z))),
        CubicShape::OneReal(z, re, im) => [
            real(polish(&coeffs, z)),
            ComplexRoot { re, im: -im },
            ComplexRoot { re, im },
        ],
    };
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(roots)
}

/// Seeded stream of uniform and standard normal variates.
///
/// Backed by ChaCha8 (`rand_chacha`); normals use the Box–Muller cosine
/// branch, so each normal consumes exactly two uniforms.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent sub-stream `stream` of `seed`, positioned at `block`
    /// (each block is 16 words of 32 bits).
    pub fn keyed(seed: u64, stream: u64, block: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(u128::from(block) * 16);
        Self { inner }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Composite Simpson rule on `n` (rounded up to even) panels. Used as a
/// brute-force cross-check in tests and reports.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> QuadResult {
        integrate_adaptive(f, Interval::new(a, b).unwrap(), DEFAULT_REL_TOL, DEFAULT_ABS_TOL).unwrap()
    }

    #[test]
    fn sine_over_half_period() {
        let r = quad(f64::sin, 0.0, PI);
        assert!((r.value - 2.0).abs() < 1e-13);
        assert!(r.abs_error >= 0.0);
    }

    #[test]
    fn square_on_unit_interval() {
        let r = quad(|x| x * x, 0.0, 1.0);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_weight_against_composite_rule() {
        let f = |t: f64| {
            let c = t.cos();
            if c <= 0.0 {
                0.0
            } else {
                (-2.0 / c).exp()
            }
        };
        // 10^6-panel Simpson is the oracle.
        let oracle = composite_simpson(f, 0.0, PI / 2.0, 1_000_000);
        let r = quad(f, 0.0, PI / 2.0);
        assert!((r.value - oracle).abs() < 1e-10, "{} vs {}", r.value, oracle);
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let err = integrate_adaptive_with_limit(|x| (1.0 / x).sin() / x.sqrt().max(1e-300), iv, 1e-15, 0.0, 3)
            .unwrap_err();
        match err {
            NumericsError::NoConvergence { best, subdivisions } => {
                assert_eq!(subdivisions, 3);
                assert!(best.value.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn cumulative_small_cases() {
        assert_eq!(cumulative_integral(&[0.0, 0.5, 1.0], &[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(cumulative_integral(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), vec![0.0, 0.5]);
        assert_eq!(
            cumulative_integral(&[0.0, 1.0, 1.0], &[0.0; 3]),
            Err(NumericsError::NonMonotone { index: 2 })
        );
        assert_eq!(cumulative_integral(&[0.0], &[0.0]), Err(NumericsError::TooFewSamples(1)));
    }

    #[test]
    fn cumulative_sine() {
        let n = 1001;
        let xs: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let cum = cumulative_integral(&xs, &fs).unwrap();
        assert!((cum[n - 1] - 2.0).abs() < 1e-5);
    }

    fn values(roots: &[RealRoot]) -> Vec<(f64, u8)> {
        roots.iter().map(|r| (r.value, r.multiplicity)).collect()
    }

    #[test]
    fn cubic_examples() {
        let r = solve_cubic_real(1.0, 0.0, -1.0, 0.0).unwrap();
        let v = values(&r);
        assert_eq!(v.len(), 3);
        for (got, want) in v.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got.0 - want).abs() < 1e-14);
        }
        assert_eq!(values(&solve_cubic_real(1.0, 0.0, 0.0, 0.0).unwrap()), vec![(0.0, 3)]);
        // (z-0.3)(z-0.7)(z+2) = z^3 + z^2 - 1.79 z + 0.42
        let r = solve_cubic_real(1.0, 1.0, -1.79, 0.42).unwrap();
        for (got, want) in r.iter().zip([-2.0, 0.3, 0.7]) {
            assert!((got.value - want).abs() < 1e-12);
        }
        assert_eq!(solve_cubic_real(0.0, 1.0, 1.0, 1.0), Err(NumericsError::DegenerateCubic));
    }

    #[test]
    fn cubic_double_and_complex() {
        // (z-1)^2 (z-2) = z^3 - 4z^2 + 5z - 2
        let r = solve_cubic_real(1.0, -4.0, 5.0, -2.0).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].value - 1.0).abs() < 1e-10 && r[0].multiplicity == 2);
        assert!((r[1].value - 2.0).abs() < 1e-12 && r[1].multiplicity == 1);
        // (z-1)(z^2+1)
        let c = cubic_roots(1.0, -1.0, 1.0, -1.0).unwrap();
        assert!((c[0].re - 0.0).abs() < 1e-14 && (c[0].im + 1.0).abs() < 1e-14);
        assert!((c[2].re - 1.0).abs() < 1e-14 && c[2].im == 0.0);
    }

    proptest! {
        #[test]
        fn cubic_vieta_and_residual(r1 in -5.0f64..5.0, r2 in -5.0f64..5.0, r3 in -5.0f64..5.0, lead in 0.1f64..10.0) {
            let a2 = -lead * (r1 + r2 + r3);
            let a1 = lead * (r1 * r2 + r1 * r3 + r2 * r3);
            let a0 = -lead * r1 * r2 * r3;
            let roots = solve_cubic_real(lead, a2, a1, a0).unwrap();
            let flat: Vec<f64> = roots.iter().flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity as usize)).collect();
            let cmax = [lead, a2, a1, a0].iter().fold(0f64, |m, c| m.max(c.abs()));
            for r in &roots {
                prop_assert!(horner(&[lead, a2, a1, a0], r.value).abs() <= 1e-10 * cmax.max(1.0) * 10.0);
            }
            if flat.len() == 3 {
                let sum: f64 = flat.iter().sum();
                prop_assert!((sum + a2 / lead).abs() <= 1e-8 * (1.0 + (a2 / lead).abs()));
                let prod: f64 = flat.iter().product();
                prop_assert!((prod + a0 / lead).abs() <= 1e-8 * (1.0 + (a0 / lead).abs()) * 10.0);
            }
            for w in roots.windows(2) {
                prop_assert!(w[0].value <= w[1].value);
            }
        }

        #[test]
        fn quadrature_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let iv = Interval::new(0.0, 2.0).unwrap();
            let f = |x: f64| (x * x).exp() * 0.1;
            let g = |x: f64| (3.0 * x).cos();
            let rf = integrate_adaptive(f, iv, 1e-12, 1e-14).unwrap();
            let rg = integrate_adaptive(g, iv, 1e-12, 1e-14).unwrap();
            let rh = integrate_adaptive(|x| alpha * f(x) + beta * g(x), iv, 1e-12, 1e-14).unwrap();
            let tol = 1e-10 * (1.0 + rh.value.abs());
            prop_assert!((rh.value - (alpha * rf.value + beta * rg.value)).abs() <= tol);
        }
    }

    #[test]
    fn rng_is_deterministic() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let mut c = RngStream::keyed(7, 3, 11);
        let mut d = RngStream::keyed(7, 3, 11);
        assert_eq!(c.normal().to_bits(), d.normal().to_bits());
        let mut e = RngStream::keyed(7, 4, 11);
        assert_ne!(RngStream::keyed(7, 3, 11).next_u64(), e.next_u64());
    }

    #[test]
    fn rng_moments() {
        let mut s = RngStream::new(2024);
        let n = 1_000_000;
        let mean_n: f64 = (0..n).map(|_| s.normal()).sum::<f64>() / n as f64;
        let mean_u: f64 = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        assert!(mean_n.abs() < 5e-3, "{mean_n}");
        assert!((mean_u - 0.5).abs() < 2e-3, "{mean_u}");
    }
}
