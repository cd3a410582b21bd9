//! Exact transmission amplitude of the Eckart potential and its semiclassical counterpart.

use crate::potential::EckartPotential;
use crate::special_fn::{bernoulli_number, bernoulli_poly, ln_gamma, LogComplex};
use crate::{Complex, Error, Result};

/// Relative distance (in units of `alpha`) from a pole at which evaluation is refused.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// `T` at one momentum.
#[derive(Clone, Copy, Debug)]
pub struct TransmissionValue {
    pub value: LogComplex,
    pub momentum: f64,
}

impl TransmissionValue {
    pub fn at(pot: &EckartPotential, p: f64) -> Result<Self> {
        Ok(TransmissionValue { value: transmission_exact(pot, Complex::new(p, 0.0))?, momentum: p })
    }
}

/// `Some(M)` when `s` is exactly the non-negative integer `M`.
pub(crate) fn integer_s(s: Complex) -> Option<u32> {
    (s.im == 0.0 && s.re >= 0.0 && s.re.fract() == 0.0 && s.re < u32::MAX as f64).then(|| s.re as u32)
}

/// Rejects `k` within `POLE_TOLERANCE * alpha` of a pole `i alpha (s - n)` or `-i alpha (n + s + 1)`.
fn check_not_at_pole(pot: &EckartPotential, z: Complex, s: Complex) -> Result<()> {
    for (w, shift) in [(z - s, s), (z + s + 1.0, -s - 1.0)] {
        // Gamma(w) has a pole where w = -n
        let n = (-w.re).round();
        if n >= 0.0 && (w + n).norm() < POLE_TOLERANCE {
            let pole = Complex::i() * pot.alpha * (shift - n);
            return Err(Error::AtPole(pole));
        }
    }
    Ok(())
}

/// Large-`z` expansion of `ln T`,
/// `sum_{j odd} 2 (B_{j+1}(s+1) - B_{j+1}) / (j (j+1) z^j)`.
///
/// The Gamma-function ratios cancel to `O(1/z)`, so for large `|z|` this series is far
/// more accurate than differencing four log-Gamma values of size `|z ln z|`.
pub fn ln_transmission_asymptotic(s: Complex, z: Complex) -> Complex {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut power = inv;
    let mut acc = Complex::new(0.0, 0.0);
    for j in (1..=19).step_by(2) {
        let coeff = 2.0 * (bernoulli_poly(j + 1, s + 1.0) - bernoulli_number(j + 1)) / (j * (j + 1)) as f64;
        acc += coeff * power;
        power *= inv2;
    }
    acc
}

/// Whether [`ln_transmission_asymptotic`] is accurate to double precision at `z`.
///
/// Off the right half-plane the reflection factor
/// `sin^2(pi z) / (sin(pi (z - s)) sin(pi (z + s)))` must equal one to round-off,
/// which holds once every sine argument is far from the real axis.
pub(crate) fn asymptotic_applies(s: Complex, z: Complex) -> bool {
    z.norm() >= 8.0 * (s + 1.0).norm() + 40.0 && (z.re > 0.0 || z.im.abs() > s.im.abs() + 12.0)
}

/// Exact transmission amplitude
/// `T = Gamma(z - s) Gamma(z + s + 1) / (Gamma(z) Gamma(1 + z))` with `z = -i k / alpha`,
/// evaluated in the log domain for any complex momentum `k`.
///
/// For integer `s = M` the ratio collapses to the finite product
/// `prod_{j=1..M} (z + j)/(z - j)`, which is used directly.
pub fn transmission_exact(pot: &EckartPotential, k: Complex) -> Result<LogComplex> {
    let s = pot.s();
    let z = -Complex::i() * k / pot.alpha;
    if let Some(m) = integer_s(s) {
        let mut acc = LogComplex::ONE;
        for j in 1..=m {
            let den = z - j as f64;
            if den.norm() < POLE_TOLERANCE {
                return Err(Error::AtPole(Complex::i() * pot.alpha * j as f64));
            }
            acc = acc * (LogComplex::from_complex(z + j as f64) / LogComplex::from_complex(den));
        }
        return Ok(acc);
    }
    check_not_at_pole(pot, z, s)?;
    if z.norm() < POLE_TOLERANCE * 1e-3 {
        // Gamma(z) Gamma(1+z) diverges while the numerator stays finite
        return Ok(LogComplex::ZERO);
    }
    if asymptotic_applies(s, z) {
        return Ok(LogComplex::from_ln(ln_transmission_asymptotic(s, z)));
    }
    let num = ln_gamma(z - s)? * ln_gamma(z + s + 1.0)?;
    let den = ln_gamma(z)? * ln_gamma(z + 1.0)?;
    Ok(num / den)
}

/// Convenience wrapper returning `T` as an ordinary complex number.
pub fn transmission_complex(pot: &EckartPotential, p: f64) -> Result<Complex> {
    Ok(transmission_exact(pot, Complex::new(p, 0.0))?.to_complex())
}

/// Semiclassical amplitude `exp(i Phi(p))`.
pub fn transmission_semiclassical(pot: &EckartPotential, p: f64) -> Result<LogComplex> {
    let phi = pot.semiclassical_phase(p)?;
    Ok(LogComplex::from_ln(Complex::i() * phi))
}

/// Defect `|T(-p*) - T(p)*|` of the conjugation symmetry, evaluated at real `p`.
pub fn transmission_symmetry_check(pot: &EckartPotential, p: f64) -> f64 {
    let k = Complex::new(p, 0.0);
    match (transmission_exact(pot, -k.conj()), transmission_exact(pot, k)) {
        (Ok(a), Ok(b)) => (a.to_complex() - b.to_complex().conj()).norm(),
        _ => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed-form `ln |T|^2` for real momentum, `sinh^2(pi p)/(sinh^2(pi p) + sin^2(pi s))`,
    /// evaluated with logarithms so that very opaque barriers do not overflow.
    fn ln_transmission_probability_ref(pot: &EckartPotential, p: f64) -> f64 {
        use std::f64::consts::PI;
        let ln_sinh = |x: f64| if x > 20.0 { x - 2f64.ln() + (-(2.0 * x)).exp().ln_1p() } else { x.sinh().ln() };
        let la = 2.0 * ln_sinh(PI * p / pot.alpha);
        let s = pot.s();
        let lb = if s.im > 0.0 {
            // s = -1/2 + i sigma gives sin^2(pi s) = cosh^2(pi sigma)
            let x = PI * s.im;
            2.0 * (x - 2f64.ln() + (-(2.0 * x)).exp().ln_1p())
        } else {
            2.0 * (PI * s.re).sin().abs().ln()
        };
        if lb > la {
            la - lb - (la - lb).exp().ln_1p()
        } else {
            -(lb - la).exp().ln_1p()
        }
    }

    #[test]
    fn asymptotic_series_matches_gamma_ratio() {
        for (u, k) in [(1.0, Complex::new(200.0, 0.0)), (2485.0, Complex::new(2000.0, 0.0)), (-3.3, Complex::new(300.0, -40.0)),
            (0.6, Complex::new(150.0, 900.0)), (40.0, Complex::new(-500.0, 30.0))]
        {
            let s = EckartPotential::dimensionless(u).s();
            let z = -Complex::i() * k;
            assert!(asymptotic_applies(s, z));
            let direct = ln_gamma(z - s).unwrap() * ln_gamma(z + s + 1.0).unwrap() / (ln_gamma(z).unwrap() * ln_gamma(z + 1.0).unwrap());
            let series = LogComplex::from_ln(ln_transmission_asymptotic(s, z));
            assert!((direct.to_complex() - series.to_complex()).norm() < 1e-10, "U = {u}, k = {k}");
        }
    }

    #[test]
    fn far_off_axis_values_are_smooth() {
        // T - 1 ~ -i mu J / k along the whole vertical line Re k = K
        let pot = EckartPotential::dimensionless(1.0);
        for y in [1e3, 1e6, 1e9, -1e3, -1e6, -1e9] {
            let k = Complex::new(60.0, y);
            let t = transmission_exact(&pot, k).unwrap().to_complex();
            let lead = -Complex::i() * pot.integral() / k;
            assert!(((t - 1.0) / lead - 1.0).norm() < 1e-2, "y = {y}");
        }
    }

    #[test]
    fn free_particle_is_transparent() {
        let pot = EckartPotential::dimensionless(0.0);
        for p in [0.1, 1.0, 30.0] {
            let t = transmission_complex(&pot, p).unwrap();
            assert!((t - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn integer_well_is_transparent() {
        let pot = EckartPotential::dimensionless(-15.0);
        assert!((transmission_complex(&pot, 0.5).unwrap().norm() - 1.0).abs() < 1e-10);
        // threshold value (-1)^M
        assert!((transmission_complex(&pot, 0.0).unwrap() + 1.0).norm() < 1e-15);
    }

    #[test]
    fn deep_tunnelling_magnitude() {
        let pot = EckartPotential::dimensionless(1e4);
        let t = transmission_exact(&pot, Complex::new(50.0, 0.0)).unwrap();
        let want = 0.5 * ln_transmission_probability_ref(&pot, 50.0) / std::f64::consts::LN_10;
        assert!((t.log10_mag() - want).abs() < 1e-9);
        // frozen value of the closed form
        assert!((t.log10_mag() + 124.7319).abs() < 1e-3);
    }

    #[test]
    fn matches_closed_form_probability() {
        for u in [-50.0, -3.3, -0.2, 0.05, 0.5, 1.0, 30.0, 2485.0] {
            let pot = EckartPotential::dimensionless(u);
            for p in [0.05, 0.7, 2.0, 9.0] {
                let t = transmission_exact(&pot, Complex::new(p, 0.0)).unwrap();
                let want = ln_transmission_probability_ref(&pot, p);
                assert!((2.0 * t.log_mag - want).abs() < 1e-9 * want.abs().max(1.0), "U = {u}, p = {p}");
            }
        }
    }

    #[test]
    fn threshold_value_is_zero_for_generic_s() {
        let pot = EckartPotential::dimensionless(0.7);
        assert!(transmission_exact(&pot, Complex::new(0.0, 0.0)).unwrap().is_zero());
        let pot = EckartPotential::dimensionless(-0.7);
        assert!(transmission_exact(&pot, Complex::new(0.0, 0.0)).unwrap().is_zero());
    }

    #[test]
    fn evaluation_at_pole_is_refused() {
        let pot = EckartPotential::dimensionless(-15.0);
        match transmission_exact(&pot, Complex::new(0.0, 3.0)) {
            Err(Error::AtPole(k)) => assert!((k - Complex::new(0.0, 3.0)).norm() < 1e-12),
            other => panic!("expected a pole error, got {other:?}"),
        }
        let pot = EckartPotential::dimensionless(1.0);
        let s = pot.s();
        let pole = Complex::i() * (s - 2.0);
        assert!(matches!(transmission_exact(&pot, pole), Err(Error::AtPole(_))));
        let pole_two = -Complex::i() * (s + 4.0);
        assert!(matches!(transmission_exact(&pot, pole_two), Err(Error::AtPole(_))));
    }

    #[test]
    fn semiclassical_cross_checks() {
        assert_eq!(
            transmission_semiclassical(&EckartPotential::dimensionless(0.0), 2.0).unwrap().to_complex(),
            Complex::new(1.0, 0.0)
        );
        let pot = EckartPotential::dimensionless(1e5);
        let exact = transmission_exact(&pot, Complex::new(700.0, 0.0)).unwrap();
        let sc = transmission_semiclassical(&pot, 700.0).unwrap();
        assert!((exact.phase - sc.phase).abs() < 0.01 * exact.phase.abs());
        let pot = EckartPotential::dimensionless(1e4);
        let exact = transmission_exact(&pot, Complex::new(50.0, 0.0)).unwrap();
        let sc = transmission_semiclassical(&pot, 50.0).unwrap();
        assert!((exact.log_mag - sc.log_mag).abs() < 0.02 * exact.log_mag.abs());
    }

    #[test]
    fn semiclassical_log_magnitude_over_barrier_range() {
        let pot = EckartPotential::dimensionless(1e5);
        for i in 0..=10 {
            let p = 600.0 + 20.0 * i as f64;
            let exact = transmission_exact(&pot, Complex::new(p, 0.0)).unwrap();
            let sc = transmission_semiclassical(&pot, p).unwrap();
            if exact.log_mag.abs() > 1e-3 {
                assert!((exact.log_mag - sc.log_mag).abs() < 0.01 * exact.log_mag.abs(), "p = {p}");
            }
        }
    }

    #[test]
    fn symmetry_examples() {
        assert!(transmission_symmetry_check(&EckartPotential::dimensionless(1.0), 1.5) < 1e-12);
        assert_eq!(transmission_symmetry_check(&EckartPotential::dimensionless(0.0), 1.5), 0.0);
        assert!(transmission_symmetry_check(&EckartPotential::dimensionless(2485.0), 10.0) < 1e-12);
    }

    proptest! {
        #[test]
        fn unitarity(u in -1e3f64..1e4, p in 1e-3f64..300.0) {
            let pot = EckartPotential::dimensionless(u);
            if let Ok(t) = transmission_exact(&pot, Complex::new(p, 0.0)) {
                prop_assert!(t.log_mag <= 1e-10);
            }
        }

        #[test]
        fn integer_transparency(m in 1u32..=6, p in 1e-3f64..50.0) {
            let u = -(m as f64) * (m as f64 + 1.0) / 2.0;
            let t = transmission_exact(&EckartPotential::dimensionless(u), Complex::new(p, 0.0)).unwrap();
            prop_assert!(t.log_mag.abs() < 1e-10);
        }

        #[test]
        fn conjugation_symmetry(u in -200f64..3000.0, p in 1e-2f64..100.0) {
            let defect = transmission_symmetry_check(&EckartPotential::dimensionless(u), p);
            let t = transmission_complex(&EckartPotential::dimensionless(u), p).unwrap();
            prop_assert!(defect < 1e-12 * t.norm().max(1e-300).max(1.0));
        }
    }
}
