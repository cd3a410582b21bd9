//! The Eckart potential, its shape parameter, local momentum, turning points
//! and the semiclassical phase and spatial shift integrals.

use crate::quadrature::integrate;
use crate::{Complex, Error, Result};

/// Half-width (in units of `1/alpha`) beyond which the potential is neglected.
const DOMAIN_HALF_WIDTH: f64 = 40.0;
/// Relative distance to the barrier top below which semiclassical integrals are refused.
const THRESHOLD_GUARD: f64 = 1e-10;

/// `V(x) = u0 / cosh^2(alpha x)` for a particle of mass `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EckartPotential {
    pub u0: f64,
    pub alpha: f64,
    pub mu: f64,
}

impl EckartPotential {
    pub fn new(u0: f64, alpha: f64, mu: f64) -> Result<Self> {
        if !(u0.is_finite() && alpha.is_finite() && mu.is_finite()) {
            return Err(Error::domain("potential parameters must be finite"));
        }
        if alpha <= 0.0 || mu <= 0.0 {
            return Err(Error::domain(format!("alpha and mu must be positive (alpha = {alpha}, mu = {mu})")));
        }
        Ok(EckartPotential { u0, alpha, mu })
    }

    /// Potential in dimensionless units (`alpha = mu = 1`) with depth `u0_bar`.
    pub fn dimensionless(u0_bar: f64) -> Self {
        EckartPotential { u0: u0_bar, alpha: 1.0, mu: 1.0 }
    }

    /// Dimensionless strength `mu U0 / alpha^2`.
    pub fn strength(&self) -> f64 {
        self.mu * self.u0 / (self.alpha * self.alpha)
    }

    /// Shape parameter `s = (-1 + sqrt(1 - 8 mu U0 / alpha^2)) / 2`, principal root.
    pub fn s(&self) -> Complex {
        let disc = Complex::new(1.0 - 8.0 * self.strength(), 0.0);
        0.5 * (disc.sqrt() - 1.0)
    }

    /// `beta = (alpha/2) sqrt(8 mu U0/alpha^2 - 1)`, the common |Re k| of barrier poles.
    pub fn beta(&self) -> Option<f64> {
        let d = 8.0 * self.strength() - 1.0;
        (d > 0.0).then(|| 0.5 * self.alpha * d.sqrt())
    }

    pub fn is_well(&self) -> bool {
        self.u0 < 0.0
    }

    pub fn energy(&self, p: f64) -> f64 {
        p * p / (2.0 * self.mu)
    }

    /// `J = integral of V over the real line`.
    pub fn integral(&self) -> f64 {
        2.0 * self.u0 / self.alpha
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let c = (self.alpha * x).cosh();
        self.u0 / (c * c)
    }

    /// Local momentum `q = sqrt(p^2 - 2 mu V)`, equal to `i|q|` where `E < V`.
    pub fn local_momentum(&self, x: f64, p: f64) -> Complex {
        let q2 = p * p - 2.0 * self.mu * self.evaluate(x);
        if q2 >= 0.0 {
            Complex::new(q2.sqrt(), 0.0)
        } else {
            Complex::new(0.0, (-q2).sqrt())
        }
    }

    /// Classical turning points `(x_<, x_>)` of a barrier below its top.
    pub fn turning_points(&self, p: f64) -> Option<(f64, f64)> {
        let e = self.energy(p);
        if self.u0 <= 0.0 || e >= self.u0 || e <= 0.0 {
            return None;
        }
        let x = (self.u0 / e).sqrt().acosh() / self.alpha;
        Some((-x, x))
    }

    fn check_momentum(&self, p: f64) -> Result<()> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain(format!("momentum must be positive and finite, got {p}")));
        }
        if self.u0 > 0.0 && ((self.energy(p) - self.u0) / self.u0).abs() < THRESHOLD_GUARD {
            return Err(Error::domain(format!(
                "energy {} lies within {THRESHOLD_GUARD:e} of the barrier top {}",
                self.energy(p),
                self.u0
            )));
        }
        Ok(())
    }

    /// `p^2 - 2 mu V(x)` at `x = xt + d`, measured from the turning point `xt` without cancellation.
    fn kinetic_from_turning_point(&self, xt: f64, d: f64) -> f64 {
        let a = self.alpha;
        let c1 = (a * (xt + d)).cosh();
        let c0 = (a * xt).cosh();
        2.0 * self.mu * self.u0 * (a * (2.0 * xt + d)).sinh() * (a * d).sinh() / (c1 * c1 * c0 * c0)
    }

    fn half_width(&self) -> f64 {
        DOMAIN_HALF_WIDTH / self.alpha
    }

    /// Semiclassical phase `Phi(p) = integral of (q - p) dx`.
    ///
    /// In a forbidden region `q = i|q|`, so `Im Phi > 0` and `|exp(i Phi)|` is the
    /// tunnelling suppression `exp(-integral |q| dx)`.
    pub fn semiclassical_phase(&self, p: f64) -> Result<Complex> {
        self.check_momentum(p)?;
        if self.u0 == 0.0 {
            return Ok(Complex::new(0.0, 0.0));
        }
        let l = self.half_width();
        let (abs_tol, rel_tol) = (1e-14 * self.integral().abs().max(1e-300), 1e-13);
        match self.turning_points(p) {
            None => {
                // q - p = -2 mu V / (q + p)
                let f = |x: f64| {
                    let v = self.evaluate(x);
                    let q = (p * p - 2.0 * self.mu * v).sqrt();
                    -2.0 * self.mu * v / (q + p)
                };
                let r = integrate(f, 0.0, l, abs_tol, rel_tol)?;
                Ok(Complex::new(2.0 * r.value, 0.0))
            }
            Some((_, xt)) => {
                let outside = |u: f64| {
                    let k2 = self.kinetic_from_turning_point(xt, u * u);
                    let q = k2.max(0.0).sqrt();
                    (q - p) * 2.0 * u
                };
                let inside = |u: f64| {
                    let k2 = self.kinetic_from_turning_point(xt, -u * u);
                    (-k2).max(0.0).sqrt() * 2.0 * u
                };
                let r_out = integrate(outside, 0.0, (l - xt).max(0.0).sqrt(), abs_tol, rel_tol)?;
                let r_in = integrate(inside, 0.0, xt.sqrt(), abs_tol, rel_tol)?;
                Ok(Complex::new(2.0 * (r_out.value - p * xt), 2.0 * r_in.value))
            }
        }
    }

    /// Spatial shift `x~' = integral of (1 - p0/q) dx = -dPhi/dp`.
    ///
    /// Real for classically allowed motion (positive over a well, negative over a
    /// barrier). Under the barrier top the imaginary part `v0 * integral dx/|v|` over
    /// the forbidden region is positive, matching `Im Phi > 0`.
    pub fn classical_shift(&self, p0: f64) -> Result<Complex> {
        self.check_momentum(p0)?;
        if self.u0 == 0.0 {
            return Ok(Complex::new(0.0, 0.0));
        }
        let l = self.half_width();
        let p = p0;
        let (abs_tol, rel_tol) = (1e-15 / self.alpha, 1e-13);
        match self.turning_points(p) {
            None => {
                // 1 - p/q = -2 mu V / (q (q + p))
                let f = |x: f64| {
                    let v = self.evaluate(x);
                    let q = (p * p - 2.0 * self.mu * v).sqrt();
                    -2.0 * self.mu * v / (q * (q + p))
                };
                let r = integrate(f, 0.0, l, abs_tol, rel_tol)?;
                Ok(Complex::new(2.0 * r.value, 0.0))
            }
            Some((_, xt)) => {
                let outside = |u: f64| {
                    if u == 0.0 {
                        return 0.0;
                    }
                    let k2 = self.kinetic_from_turning_point(xt, u * u);
                    let q = k2.sqrt();
                    // (1 - p/q) 2u; the p/q piece is finite after the substitution
                    2.0 * u - p * 2.0 * u / q
                };
                let inside = |u: f64| {
                    if u == 0.0 {
                        return 0.0;
                    }
                    let k2 = self.kinetic_from_turning_point(xt, -u * u);
                    p * 2.0 * u / (-k2).sqrt()
                };
                let r_out = integrate(outside, 0.0, (l - xt).max(0.0).sqrt(), abs_tol, rel_tol)?;
                let r_in = integrate(inside, 0.0, xt.sqrt(), abs_tol, rel_tol)?;
                Ok(Complex::new(2.0 * (r_out.value + xt), 2.0 * r_in.value))
            }
        }
    }
}

/// Conversion between physical and dimensionless variables
/// (`x_bar = alpha x`, `p_bar = p/alpha`, `t_bar = alpha^2 t/mu`, `U_bar = mu U0/alpha^2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionlessScales {
    pub alpha: f64,
    pub mu: f64,
}

impl DimensionlessScales {
    pub fn of(pot: &EckartPotential) -> Self {
        DimensionlessScales { alpha: pot.alpha, mu: pot.mu }
    }
    pub fn length_to_bar(&self, x: f64) -> f64 {
        self.alpha * x
    }
    pub fn length_from_bar(&self, x: f64) -> f64 {
        x / self.alpha
    }
    pub fn momentum_to_bar(&self, p: f64) -> f64 {
        p / self.alpha
    }
    pub fn momentum_from_bar(&self, p: f64) -> f64 {
        p * self.alpha
    }
    pub fn time_to_bar(&self, t: f64) -> f64 {
        self.alpha * self.alpha * t / self.mu
    }
    pub fn time_from_bar(&self, t: f64) -> f64 {
        t * self.mu / (self.alpha * self.alpha)
    }
    pub fn energy_to_bar(&self, u: f64) -> f64 {
        self.mu * u / (self.alpha * self.alpha)
    }
    pub fn energy_from_bar(&self, u: f64) -> f64 {
        u * self.alpha * self.alpha / self.mu
    }
}
