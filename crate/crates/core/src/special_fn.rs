//! Complex special functions: log-Gamma, reciprocal Gamma, the Faddeeva
//! function and the complex error function, digamma and harmonic numbers.

use std::f64::consts::{LN_2, PI};
use std::ops::{Div, Mul};
use std::sync::OnceLock;

use crate::{Complex, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// A complex number stored as `(ln|z|, arg z)`.
///
/// Products and quotients are exact in the stored fields, which keeps numbers
/// such as `1e-221` or `1e+300 * 1e+300` representable. Zero is encoded with
/// `log_mag = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
}

impl LogComplex {
    pub const ONE: LogComplex = LogComplex { log_mag: 0.0, phase: 0.0 };
    pub const ZERO: LogComplex = LogComplex { log_mag: f64::NEG_INFINITY, phase: 0.0 };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        LogComplex { log_mag, phase: wrap_phase(phase) }
    }

    /// Builds the value `exp(l)` from a complex logarithm `l`.
    pub fn from_ln(l: Complex) -> Self {
        Self::new(l.re, l.im)
    }

    pub fn from_complex(z: Complex) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> Complex {
        if self.is_zero() {
            return Complex::new(0.0, 0.0);
        }
        Complex::from_polar(self.log_mag.exp(), self.phase)
    }

    /// `z * exp(-shift)` as an ordinary complex number.
    pub fn scaled(self, shift: f64) -> Complex {
        if self.is_zero() {
            return Complex::new(0.0, 0.0);
        }
        Complex::from_polar((self.log_mag - shift).exp(), self.phase)
    }

    /// Principal complex logarithm `ln|z| + i arg z`.
    pub fn ln(self) -> Complex {
        Complex::new(self.log_mag, self.phase)
    }

    pub fn log10_mag(self) -> f64 {
        self.log_mag / std::f64::consts::LN_10
    }

    pub fn conj(self) -> Self {
        Self::new(self.log_mag, -self.phase)
    }

    pub fn recip(self) -> Self {
        Self::new(-self.log_mag, -self.phase)
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        LogComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: LogComplex) -> LogComplex {
        LogComplex::new(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }
}

/// Returns `Some(n)` when `z` is exactly the non-positive integer `n`.
fn nonpositive_integer(z: Complex) -> Option<i64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        Some(z.re as i64)
    } else {
        None
    }
}

/// `exp(u) - 1` without cancellation for small `u`.
pub(crate) fn expm1_c(u: Complex) -> Complex {
    let (s, c) = u.im.sin_cos();
    let half = (0.5 * u.im).sin();
    Complex::new(u.re.exp_m1() * c - 2.0 * half * half, u.re.exp() * s)
}

/// A branch of `ln sin(pi z)` that stays finite for large `|Im z|`.
fn ln_sin_pi(z: Complex) -> Complex {
    let m = z.re.round();
    let mut w = z - m;
    let flip = w.im < 0.0;
    if flip {
        w = w.conj();
    }
    // sin(pi w) = -exp(-i pi w) (1 - exp(2 i pi w)) / (2i), with |exp(2 i pi w)| <= 1
    let e = expm1_c(Complex::new(-2.0 * PI * w.im, 2.0 * PI * w.re));
    let mut l = Complex::new(PI * w.im, -PI * w.re) + e.ln() - Complex::new(LN_2, 0.5 * PI);
    if flip {
        l = l.conj();
    }
    if (m as i64).rem_euclid(2) == 1 {
        l.im += PI;
    }
    l
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Some branch of `ln Gamma(z)`; callers wrap the imaginary part.
fn ln_gamma_branch(z: Complex) -> Complex {
    if z.re < 0.5 {
        return Complex::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_branch(1.0 - z);
    }
    let zm = z - 1.0;
    let mut sum = Complex::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += *c / (zm + i as f64);
    }
    let t = zm + LANCZOS_G + 0.5;
    (zm + 0.5) * t.ln() - t + LN_SQRT_2PI + sum.ln()
}

/// `ln Gamma(z)` in log-domain form.
pub fn ln_gamma(z: Complex) -> Result<LogComplex> {
    if let Some(n) = nonpositive_integer(z) {
        return Err(Error::GammaPole(n));
    }
    Ok(LogComplex::from_ln(ln_gamma_branch(z)))
}

/// `1 / Gamma(z)`, exactly zero at the non-positive integers.
pub fn reciprocal_gamma(z: Complex) -> Complex {
    match ln_gamma(z) {
        Ok(l) => l.recip().to_complex(),
        Err(_) => Complex::new(0.0, 0.0),
    }
}

/// `1 / Gamma(z)` in log-domain form (`LogComplex::ZERO` at the poles of Gamma).
pub fn ln_reciprocal_gamma(z: Complex) -> LogComplex {
    match ln_gamma(z) {
        Ok(l) => l.recip(),
        Err(_) => LogComplex::ZERO,
    }
}

const WEIDEMAN_N: usize = 40;

/// Polynomial coefficients of Weideman's rational approximation, highest degree first.
fn weideman_coefficients() -> &'static [f64; WEIDEMAN_N] {
    static COEFFS: OnceLock<[f64; WEIDEMAN_N]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / 2f64.sqrt()).sqrt();
        // f on k = -m+1 .. m-1 with a leading zero, then fftshift
        let mut f = vec![0.0; m2];
        for (j, k) in (-(m as i64) + 1..m as i64).enumerate() {
            let theta = k as f64 * PI / m as f64;
            let t = l * (0.5 * theta).tan();
            f[j + 1] = (-t * t).exp() * (l * l + t * t);
        }
        let shifted: Vec<f64> = (0..m2).map(|i| f[(i + m) % m2]).collect();
        let mut a = [0.0; WEIDEMAN_N];
        for j in 1..=n {
            let mut acc = 0.0;
            for (i, v) in shifted.iter().enumerate() {
                acc += v * (2.0 * PI * (j * i) as f64 / m2 as f64).cos();
            }
            a[n - j] = acc / m2 as f64;
        }
        a
    })
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-i z)`.
pub fn faddeeva(z: Complex) -> Complex {
    if z.im < 0.0 {
        return 2.0 * (-z * z).exp() - faddeeva(-z);
    }
    if z.norm() < 10.0 {
        let l = (WEIDEMAN_N as f64 / 2f64.sqrt()).sqrt();
        let iz = Complex::new(-z.im, z.re);
        let den = l - iz;
        let zz = (l + iz) / den;
        let mut p = Complex::new(0.0, 0.0);
        for c in weideman_coefficients() {
            p = p * zz + c;
        }
        2.0 * p / (den * den) + FRAC_1_SQRT_PI / den
    } else {
        // Laplace continued fraction, accurate for |z| >= 10 in the upper half-plane
        let mut r = Complex::new(0.0, 0.0);
        for k in (1..=40).rev() {
            r = (0.5 * k as f64) / (z - r);
        }
        Complex::new(0.0, FRAC_1_SQRT_PI) / (z - r)
    }
}

/// `ln w(z)`, finite where `w` itself overflows (deep in the lower half-plane).
pub fn ln_faddeeva(z: Complex) -> Complex {
    if z.im >= 0.0 {
        return faddeeva(z).ln();
    }
    // w(z) = 2 exp(-z^2) - w(-z)
    let a = std::f64::consts::LN_2 - z * z;
    let b = (-faddeeva(-z)).ln();
    let (hi, lo) = if a.re >= b.re { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp()).ln()
}

fn erf_series(z: Complex) -> Complex {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    for n in 1..200 {
        term = -term * z2 / n as f64;
        let contrib = term / (2 * n + 1) as f64;
        sum += contrib;
        if contrib.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * sum
}

/// Complex error function.
pub fn erf_complex(z: Complex) -> Complex {
    if z.norm() < 2.0 {
        return erf_series(z);
    }
    if z.re < 0.0 {
        return -erf_complex(-z);
    }
    1.0 - (-z * z).exp() * faddeeva(Complex::new(-z.im, z.re))
}

/// Bernoulli numbers `B_0 ..= B_20` with `B_1 = -1/2`.
const BERNOULLI: [f64; 21] = [1.0, -0.5, 0.16666666666666666, 0.0, -0.03333333333333333, 0.0, 0.023809523809523808, 0.0, -0.03333333333333333, 0.0, 0.07575757575757576, 0.0, -0.2531135531135531, 0.0, 1.1666666666666667, 0.0, -7.092156862745098, 0.0, 54.971177944862156, 0.0, -529.1242424242424];

/// Bernoulli number `B_n` for `n <= 20`.
pub fn bernoulli_number(n: usize) -> f64 {
    BERNOULLI[n]
}

/// Bernoulli polynomial `B_n(x) = sum_k C(n, k) B_k x^(n-k)` for `n <= 20`.
pub fn bernoulli_poly(n: usize, x: Complex) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    let mut binom = 1.0;
    for k in 0..=n {
        acc = acc * x + binom * BERNOULLI[k];
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// `sum_{k=1}^n 1/k`.
pub fn harmonic(n: u64) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Complex digamma function `psi(z) = Gamma'(z)/Gamma(z)`.
pub fn digamma(z: Complex) -> Result<Complex> {
    if let Some(n) = nonpositive_integer(z) {
        return Err(Error::GammaPole(n));
    }
    if z.re < 0.5 {
        let cot = (PI * z).cos() / (PI * z).sin();
        return Ok(digamma(1.0 - z)? - PI * cot);
    }
    let mut acc = Complex::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 12.0 {
        acc -= 1.0 / w;
        w += 1.0;
    }
    let w2 = (w * w).inv();
    let series = w2
        * (-1.0 / 12.0
            + w2 * (1.0 / 120.0
                + w2 * (-1.0 / 252.0 + w2 * (1.0 / 240.0 + w2 * (-1.0 / 132.0 + w2 * 691.0 / 32760.0)))));
    Ok(acc + w.ln() - 0.5 / w + series)
}

/// Trigamma function for real `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut w = x;
    while w < 12.0 {
        acc += 1.0 / (w * w);
        w += 1.0;
    }
    let w2 = 1.0 / (w * w);
    acc + 1.0 / w
        + 0.5 * w2
        + w2 / w * (1.0 / 6.0 + w2 * (-1.0 / 30.0 + w2 * (1.0 / 42.0 + w2 * (-1.0 / 30.0 + w2 * 5.0 / 66.0))))
}
