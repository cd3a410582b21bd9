//! Gaussian wave packets: free motion, transmission across the potential and
//! centre-of-mass observables.
//!
//! A packet is `psi(x, 0) = N exp(-(x - x0)^2/dx^2 + i p0 x)` with `dx = 2/dp`,
//! i.e. the momentum amplitude `A(p) ~ exp(-(p - p0)^2/dp^2 - i (p - p0) x0)`.
//! Transmitted fields are tiny in deep tunnelling, so every field carries a
//! separate `log_scale`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::csv_out::CsvTable;
use crate::delay::delay_moments;
use crate::poles::{nearest_pole_distance, PoleOptions, PoleSet};
use crate::potential::EckartPotential;
use crate::quadrature::{composite_gauss_legendre, trapezoid};
use crate::special_fn::{ln_faddeeva, LogComplex};
use crate::transmission::{transmission_exact, transmission_semiclassical};
use crate::{Complex, Error, Result};

/// Initial Gaussian state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub p0: f64,
    pub dp: f64,
    pub x0: f64,
    pub mu: f64,
}

impl GaussianPacket {
    pub fn new(p0: f64, dp: f64, x0: f64) -> Result<Self> {
        Self::with_mass(p0, dp, x0, 1.0)
    }

    pub fn with_mass(p0: f64, dp: f64, x0: f64, mu: f64) -> Result<Self> {
        if !(p0 > 0.0 && dp > 0.0 && mu > 0.0) || !x0.is_finite() {
            return Err(Error::domain(format!("packet needs p0 > 0, dp > 0, mu > 0 (got {p0}, {dp}, {mu})")));
        }
        Ok(GaussianPacket { p0, dp, x0, mu })
    }

    /// Coordinate width `2/dp`.
    pub fn dx(&self) -> f64 {
        2.0 / self.dp
    }

    pub fn velocity(&self) -> f64 {
        self.p0 / self.mu
    }

    fn ln_norm(&self) -> f64 {
        0.25 * (2.0 / (PI * self.dx() * self.dx())).ln()
    }

    /// `ln A(p - p0)`, normalised so that `psi(x, 0) = \int A e^{ipx} dp`.
    pub fn ln_amplitude(&self, p: f64) -> Complex {
        let d = p - self.p0;
        Complex::new(self.ln_norm() - (PI.sqrt() * self.dp).ln() - d * d / (self.dp * self.dp), -d * self.x0)
    }

    /// Same packet with a shifted mean momentum and the same `A` phase origin.
    fn boosted(&self, dp0: f64) -> GaussianPacket {
        GaussianPacket { p0: self.p0 + dp0, ..*self }
    }

    /// Complex width `sqrt(dx^2 + 2 i t / mu)` at time `t`.
    pub fn complex_width(&self, t: f64) -> Complex {
        Complex::new(self.dx() * self.dx(), 2.0 * t / self.mu).sqrt()
    }

    /// Spread of `|psi|` at time `t`: `|width|^2 / dx`.
    pub fn spread(&self, t: f64) -> f64 {
        self.complex_width(t).norm_sqr() / self.dx()
    }

    /// Uniform grid of `n` points covering the packet at time `t` moved by `shift`, +-`widths` spreads.
    pub fn grid(&self, t: f64, shift: f64, widths: f64, n: usize) -> Vec<f64> {
        let c = self.x0 + self.velocity() * t + shift;
        let h = widths * self.spread(t);
        crate::delay::uniform_grid(c - h, c + h, n)
    }

    /// `ln psi0(x, t)` including the plane-wave factor.
    fn ln_free(&self, x: f64, t: f64) -> Complex {
        let w = self.complex_width(t);
        let u = x - self.x0 - self.velocity() * t;
        let energy = self.p0 * self.p0 / (2.0 * self.mu);
        Complex::new(self.ln_norm(), 0.0) + (self.dx() / w).ln() - u * u / (w * w)
            + Complex::new(0.0, self.p0 * x - energy * t)
    }
}

/// Sampled wave function `values * exp(log_scale)` at time `time`.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub x_grid: Vec<f64>,
    pub values: Vec<Complex>,
    /// Natural log of the common magnitude factor.
    pub log_scale: f64,
    pub time: f64,
}

impl WaveField {
    /// Builds a field from log values, factoring out the largest magnitude.
    pub fn from_logs(x_grid: Vec<f64>, logs: &[Complex], time: f64) -> Self {
        let top = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let scale = if top.is_finite() { top } else { 0.0 };
        let values = logs.iter().map(|l| if l.re.is_finite() { (l - scale).exp() } else { Complex::default() }).collect();
        WaveField { x_grid, values, log_scale: scale, time }
    }

    /// Puts the largest mantissa magnitude to one.
    pub fn normalised(mut self) -> Self {
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if top > 0.0 && top.is_finite() {
            self.values.iter_mut().for_each(|v| *v /= top);
            self.log_scale += top.ln();
        }
        self
    }

    /// `|psi|^2` mantissa; the physical density is this times `exp(2 log_scale)`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `log10 max |psi|`.
    pub fn log10_peak(&self) -> f64 {
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        (top.ln() + self.log_scale) / std::f64::consts::LN_10
    }

    /// `\int |psi|^2 dx` on the grid.
    pub fn norm_sqr(&self) -> f64 {
        trapezoid(&self.x_grid, &self.density()) * (2.0 * self.log_scale).exp()
    }

    /// Physical values `psi(x)`; underflows in deep tunnelling.
    pub fn physical(&self) -> Vec<Complex> {
        let f = self.log_scale.exp();
        self.values.iter().map(|v| v * f).collect()
    }

    /// CSV table with columns `x, Re psi, Im psi, |psi|^2` of the mantissa.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["x", "re_psi", "im_psi", "abs2"], self.log_scale, "x=1/alpha;psi=alpha^(1/2)")
            .with_meta("t", self.time);
        for (x, v) in self.x_grid.iter().zip(&self.values) {
            t.push_floats(&[*x, v.re, v.im, v.norm_sqr()]);
        }
        t
    }
}

/// `|psi^T|^2 - |psi^0|^2` on a shared grid, as physical densities.
pub fn density_difference(transmitted: &WaveField, free: &WaveField) -> Result<CsvTable> {
    if transmitted.x_grid != free.x_grid {
        return Err(Error::domain("fields live on different grids"));
    }
    let (st, sf) = ((2.0 * transmitted.log_scale).exp(), (2.0 * free.log_scale).exp());
    let mut t = CsvTable::new(&["x", "rho_t", "rho_free", "difference"], 0.0, "x=1/alpha;rho=alpha")
        .with_meta("t", transmitted.time);
    for ((x, a), b) in transmitted.x_grid.iter().zip(transmitted.density()).zip(free.density()) {
        t.push_floats(&[*x, a * st, b * sf, a * st - b * sf]);
    }
    Ok(t)
}

/// Freely moving envelope `G0(x, t) = N (dx/w) exp(-(x - x0 - v0 t)^2/w^2)`, `w^2 = dx^2 + 2it/mu`.
pub fn free_envelope(packet: &GaussianPacket, x: f64, t: f64) -> Complex {
    let w = packet.complex_width(t);
    let u = x - packet.x0 - packet.velocity() * t;
    packet.ln_norm().exp() * packet.dx() / w * (-(u * u) / (w * w)).exp()
}

/// Free packet `exp(i p0 x - i E(p0) t) G0(x, t)`.
pub fn free_packet(packet: &GaussianPacket, grid: &[f64], t: f64) -> WaveField {
    let logs: Vec<Complex> = grid.iter().map(|&x| packet.ln_free(x, t)).collect();
    WaveField::from_logs(grid.to_vec(), &logs, t)
}

/// Momentum window holding the transmitted weight `|T A|` down to `1e-12` of its peak.
fn momentum_window(pot: &EckartPotential, packet: &GaussianPacket) -> Result<(f64, f64)> {
    let weight = |p: f64| -> Result<f64> { Ok(transmission_exact(pot, Complex::new(p, 0.0))?.log_mag + packet.ln_amplitude(p).re) };
    let (mut lo, mut hi) = (packet.p0 - 8.0 * packet.dp, packet.p0 + 8.0 * packet.dp);
    let floor = 12.0 * std::f64::consts::LN_10;
    let mut step = 8.0 * packet.dp;
    for _ in 0..60 {
        let samples = 400;
        let mut peak = f64::NEG_INFINITY;
        for i in 0..=samples {
            peak = peak.max(weight(lo + (hi - lo) * i as f64 / samples as f64)?);
        }
        let grow_lo = weight(lo)? > peak - floor;
        let grow_hi = weight(hi)? > peak - floor;
        if !grow_lo && !grow_hi {
            return Ok((lo, hi));
        }
        if grow_lo {
            lo -= step;
        }
        if grow_hi {
            hi += step;
        }
        step *= 2.0;
    }
    Err(Error::numerical("wavepacket", format!("momentum window did not close; reached [{lo}, {hi}]")))
}

/// `psi^T(x, t) = \int T(p) A(p - p0) exp(i p x - i E(p) t) dp` by Gauss-Legendre
/// quadrature of log-domain integrand values over an adaptive momentum window.
pub fn transmitted_quadrature(pot: &EckartPotential, packet: &GaussianPacket, grid: &[f64], t: f64) -> Result<WaveField> {
    transmitted_with(packet, grid, t, momentum_window(pot, packet)?, nearest_pole_distance(pot, Complex::new(packet.p0, 0.0)), |p| {
        transmission_exact(pot, Complex::new(p, 0.0))
    })
}

fn transmitted_with<G>(packet: &GaussianPacket, grid: &[f64], t: f64, window: (f64, f64), feature: f64, amp: G) -> Result<WaveField>
where
    G: Fn(f64) -> Result<LogComplex> + Sync,
{
    let (lo, hi) = window;
    let (xmin, xmax) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let v = t / packet.mu;
    let reach = [(xmin, lo), (xmin, hi), (xmax, lo), (xmax, hi)]
        .iter()
        .map(|(x, p)| (x - packet.x0 - p * v).abs())
        .fold(0.0, f64::max);
    let h = (0.5 * packet.dp).min(2.0 * PI / reach.max(1e-12)).min(0.5 * feature.max(1e-9));
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    if panels > 2_000_000 {
        return Err(Error::numerical("wavepacket", format!("momentum quadrature needs {panels} panels")));
    }
    let edges: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    let (nodes, weights) = composite_gauss_legendre(&edges, 16);
    let logs = nodes
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&p, &w)| {
            let tr = amp(p)?;
            let energy = p * p / (2.0 * packet.mu);
            Ok(tr.ln() + packet.ln_amplitude(p) + Complex::new(w.ln(), -energy * t))
        })
        .collect::<Result<Vec<Complex>>>()?;
    let shift = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<(f64, Complex)> = nodes
        .iter()
        .zip(&logs)
        .filter(|(_, l)| l.re > shift - 80.0)
        .map(|(&p, l)| (p, (l - shift).exp()))
        .collect();
    let values: Vec<Complex> = grid
        .par_iter()
        .map(|&x| terms.iter().map(|(p, c)| c * Complex::from_polar(1.0, p * x)).sum())
        .collect();
    Ok(WaveField { x_grid: grid.to_vec(), values, log_scale: shift, time: t }.normalised())
}

/// `\int A e^{ipx - iEt} / (p - k)^order dp` divided by `psi0(x, t)`, for `order` in {1, 2}.
fn pole_factor(packet: &GaussianPacket, x: f64, t: f64, k: Complex, order: u8) -> Complex {
    let a = Complex::new(1.0 / (packet.dp * packet.dp), t / (2.0 * packet.mu));
    let b = Complex::new(2.0 * packet.p0 / (packet.dp * packet.dp), x - packet.x0);
    let centre = b / (2.0 * a);
    let ra = a.sqrt();
    let z = ra * (k - centre);
    let ipi = Complex::new(0.0, PI);
    let scale = ra / PI.sqrt();
    // Im k > 0: \int_L e^{-u^2}/(u - z) du = i pi w(z); below: -i pi w(-z)
    match (order, k.im > 0.0) {
        (1, true) => scale * ipi * ln_faddeeva(z).exp(),
        (1, false) => -scale * ipi * ln_faddeeva(-z).exp(),
        (_, above) => {
            let zz = if above { z } else { -z };
            let dw = -2.0 * zz * ln_faddeeva(zz).exp() + Complex::new(0.0, 2.0 / PI.sqrt());
            scale * ra * ipi * dw
        }
    }
}

/// `psi^T = psi0 [1 + sum_n (Res_n F_1(k_n) + A2_n F_2(k_n))]`, the residue expansion
/// of `T` integrated against the Gaussian in closed form (Faddeeva functions).
/// Exact and finite for integer `s`.
pub fn transmitted_pole_form(pot: &EckartPotential, packet: &GaussianPacket, grid: &[f64], t: f64, n_max: usize) -> Result<WaveField> {
    let set = PoleSet::build(pot, n_max, &PoleOptions::default())?;
    transmitted_from_poles(&set, packet, grid, t)
}

/// As [`transmitted_pole_form`] for an explicit pole set; any analytic tail is ignored.
pub fn transmitted_from_poles(set: &PoleSet, packet: &GaussianPacket, grid: &[f64], t: f64) -> Result<WaveField> {
    let logs: Vec<Complex> = grid
        .par_iter()
        .map(|&x| {
            let mut bracket = Complex::new(1.0, 0.0);
            for p in &set.poles {
                if !p.ln_residue.is_zero() {
                    bracket += (p.ln_residue.ln() + pole_factor(packet, x, t, p.position, 1).ln()).exp();
                }
                if p.order == 2 {
                    bracket += p.laurent2 * pole_factor(packet, x, t, p.position, 2);
                }
            }
            packet.ln_free(x, t) + bracket.ln()
        })
        .collect();
    if logs.iter().any(|l| l.re.is_nan() || l.re == f64::INFINITY) {
        return Err(Error::numerical("wavepacket", "pole expansion overflowed"));
    }
    Ok(WaveField::from_logs(grid.to_vec(), &logs, t))
}

/// Semiclassical transmitted packet
/// `T(p0) exp(dp^2 x2^2/4 + i p0 x1) psi0(x - x1, t; p0 + dp^2 x2/2)`, with the
/// complex shift `x1 + i x2` from the stationary-phase analysis. Over the
/// barrier top, or for a well, `x2 = 0` and this is the shifted free packet.
pub fn transmitted_semiclassical(pot: &EckartPotential, packet: &GaussianPacket, grid: &[f64], t: f64) -> Result<WaveField> {
    let shift = pot.classical_shift(packet.p0)?;
    let (x1, x2) = (shift.re, shift.im);
    let boost = 0.5 * packet.dp * packet.dp * x2;
    let moved = packet.boosted(boost);
    let tr = transmission_semiclassical(pot, packet.p0)?;
    let prefactor = tr.ln() + Complex::new(0.25 * (packet.dp * x2).powi(2), packet.p0 * x1 - boost * packet.x0);
    let logs: Vec<Complex> = grid.iter().map(|&x| prefactor + moved.ln_free(x - x1, t)).collect();
    Ok(WaveField::from_logs(grid.to_vec(), &logs, t))
}

/// Centre of mass `\int x |psi|^2 / \int |psi|^2` on the grid.
pub fn com_position(field: &WaveField) -> Result<f64> {
    let rho = field.density();
    let norm = trapezoid(&field.x_grid, &rho);
    if !(norm > 0.0) {
        return Err(Error::domain("field has zero norm"));
    }
    let first: Vec<f64> = field.x_grid.iter().zip(&rho).map(|(x, r)| x * r).collect();
    Ok(trapezoid(&field.x_grid, &first) / norm)
}

/// `x_COM(transmitted) - x_COM(free)` at time `t`.
pub fn com_delay(pot: &EckartPotential, packet: &GaussianPacket, grid: &[f64], t: f64) -> Result<f64> {
    let tr = transmitted_quadrature(pot, packet, grid, t)?;
    Ok(com_position(&tr)? - com_position(&free_packet(packet, grid, t))?)
}

/// Increase of the mean velocity by momentum filtering,
/// `\int (p - p0) |T A|^2 dp / (mu \int |T A|^2 dp)`.
pub fn filtered_velocity_shift(pot: &EckartPotential, packet: &GaussianPacket) -> Result<f64> {
    let (lo, hi) = momentum_window(pot, packet)?;
    let feature = nearest_pole_distance(pot, Complex::new(packet.p0, 0.0));
    let h = (0.25 * packet.dp).min(0.5 * feature.max(1e-9));
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    let edges: Vec<f64> = (0..=panels).map(|i| lo + (hi - lo) * i as f64 / panels as f64).collect();
    let (nodes, weights) = composite_gauss_legendre(&edges, 16);
    let logs = nodes
        .par_iter()
        .map(|&p| Ok(2.0 * (transmission_exact(pot, Complex::new(p, 0.0))?.log_mag + packet.ln_amplitude(p).re)))
        .collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::domain("transmission vanishes over the whole momentum window"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((p, w), l) in nodes.iter().zip(&weights).zip(&logs) {
        let r = (l - top).exp() * w;
        num += (p - packet.p0) * r;
        den += r;
    }
    Ok(num / (den * packet.mu))
}

/// Phase time and the broad-packet centre-of-mass prediction.
#[derive(Clone, Copy, Debug)]
pub struct PhaseTime {
    /// `v0^-1 d arg T / dp` at `p0`.
    pub tau_phase: f64,
    /// `-v0 tau_phase + Im(x1) dp^2 t / (2 mu)`, with `x1 = T^-1 i dT/dp`.
    pub com_prediction: f64,
    pub velocity_shift: f64,
    /// `alpha dx`; the prediction needs this large.
    pub broadness: f64,
}

pub fn phase_time_and_broad_com(pot: &EckartPotential, packet: &GaussianPacket, t: f64) -> Result<PhaseTime> {
    let first = delay_moments(pot, packet.p0, 1)?;
    let v0 = packet.velocity();
    // x1 = i d ln T/dp, so d arg T/dp = -Re x1 and d ln|T|/dp = Im x1
    let tau_phase = -first.re / v0;
    let velocity_shift = first.im * packet.dp * packet.dp / (2.0 * packet.mu);
    Ok(PhaseTime {
        tau_phase,
        com_prediction: -v0 * tau_phase + velocity_shift * t,
        velocity_shift,
        broadness: pot.alpha * packet.dx(),
    })
}

/// Which comparison the arrival-time difference refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrivalMode {
    /// Against free motion at `p0`: `-x~'/v0`.
    Classical,
    /// Against free motion at `p0 + dp0`: `-Re x~'/v0`.
    Tunnelling,
}

pub fn arrival_time_difference(pot: &EckartPotential, packet: &GaussianPacket, mode: ArrivalMode) -> Result<f64> {
    let shift = pot.classical_shift(packet.p0)?;
    if mode == ArrivalMode::Classical && shift.im != 0.0 {
        return Err(Error::domain("classical arrival times need allowed motion at p0"));
    }
    Ok(-shift.re / packet.velocity())
}

/// Pointer density and mean position for the two-path pointer analogy.
#[derive(Clone, Debug)]
pub struct PointerReading {
    pub rho: Vec<f64>,
    pub mean_x: f64,
    /// `Re[(eta1 + 2 eta2)/(eta1 + eta2)]`.
    pub broad_limit: f64,
}

/// `rho(x) = |G(x-1) eta1 + G(x-2) eta2|^2` with `G(x) = exp(-x^2/dx^2)`, and its mean.
pub fn double_slit_demo(eta1: Complex, eta2: Complex, dx: f64, x_grid: &[f64]) -> Result<PointerReading> {
    if !(dx > 0.0) {
        return Err(Error::domain(format!("pointer width must be positive, got {dx}")));
    }
    let total = eta1 + eta2;
    if total.norm() <= 1e-14 * (eta1.norm() + eta2.norm()) {
        return Err(Error::domain("eta1 + eta2 = 0: the broad-pointer mean is undefined"));
    }
    let g = |x: f64| (-(x / dx).powi(2)).exp();
    let rho: Vec<f64> = x_grid.iter().map(|&x| (eta1 * g(x - 1.0) + eta2 * g(x - 2.0)).norm_sqr()).collect();
    let norm = trapezoid(x_grid, &rho);
    if !(norm > 0.0) {
        return Err(Error::domain("pointer density vanishes on the grid"));
    }
    let first: Vec<f64> = x_grid.iter().zip(&rho).map(|(x, r)| x * r).collect();
    Ok(PointerReading { mean_x: trapezoid(x_grid, &first) / norm, broad_limit: ((eta1 + 2.0 * eta2) / total).re, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{eta_spectral, relative_l2, uniform_grid, SpectralOptions};
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    fn dimless(u: f64) -> EckartPotential {
        EckartPotential::dimensionless(u)
    }

    fn same_field(a: &WaveField, b: &WaveField) -> f64 {
        let pa = a.values.iter().map(|v| v * (a.log_scale - b.log_scale).exp()).collect::<Vec<_>>();
        relative_l2(&pa, &b.values)
    }

    #[test]
    fn envelope_peak_norm_and_motion() {
        let pk = GaussianPacket::new(2.0, 0.5, -10.0).unwrap();
        let peak = (2.0 / (PI * pk.dx() * pk.dx())).powf(0.25);
        assert!((free_envelope(&pk, -10.0, 0.0).re - peak).abs() < 1e-15);
        for t in [0.0, 3.0, 40.0] {
            let n = integrate(|x| free_envelope(&pk, x, t).norm_sqr(), -400.0, 400.0, 1e-13, 1e-12).unwrap().value;
            assert!((n - 1.0).abs() < 1e-8, "t = {t}: {n}");
            let grid = pk.grid(t, 0.0, 10.0, 4001);
            let com = com_position(&free_packet(&pk, &grid, t)).unwrap();
            assert!((com - (-10.0 + 2.0 * t)).abs() < 1e-8);
        }
    }

    #[test]
    fn free_packet_is_envelope_times_plane_wave() {
        let pk = GaussianPacket::new(1.5, 0.3, -5.0).unwrap();
        let grid = pk.grid(2.0, 0.0, 6.0, 301);
        let f = free_packet(&pk, &grid, 2.0);
        for (x, v) in grid.iter().zip(f.physical()) {
            assert!((v.norm() - free_envelope(&pk, *x, 2.0).norm()).abs() < 1e-13);
        }
        assert!((f.norm_sqr() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_potential_leaves_packet_free() {
        let pk = GaussianPacket::new(1.5, 0.3, -20.0).unwrap();
        let grid = pk.grid(10.0, 0.0, 8.0, 801);
        let free = free_packet(&pk, &grid, 10.0);
        let q = transmitted_quadrature(&dimless(0.0), &pk, &grid, 10.0).unwrap();
        assert!(same_field(&q, &free) < 1e-10);
        let p = transmitted_pole_form(&dimless(0.0), &pk, &grid, 10.0, 8).unwrap();
        assert!(same_field(&p, &free) < 1e-12);
        let s = transmitted_semiclassical(&dimless(0.0), &pk, &grid, 10.0).unwrap();
        assert!(same_field(&s, &free) < 1e-12);
        assert_eq!(com_delay(&dimless(0.0), &pk, &grid, 10.0).unwrap().abs() < 1e-9, true);
        assert!(filtered_velocity_shift(&dimless(0.0), &pk).unwrap().abs() < 1e-12);
    }

    #[test]
    fn integer_well_pole_form_is_exact() {
        let pot = dimless(-15.0);
        let pk = GaussianPacket::new(0.5, 0.1, -100.0).unwrap();
        let grid = pk.grid(650.0, 0.0, 6.0, 1201);
        let q = transmitted_quadrature(&pot, &pk, &grid, 650.0).unwrap();
        let p = transmitted_pole_form(&pot, &pk, &grid, 650.0, 5).unwrap();
        assert!(same_field(&p, &q) < 1e-6, "{}", same_field(&p, &q));
    }

    #[test]
    fn pole_form_converges_for_low_barrier() {
        let pot = dimless(1.0);
        let pk = GaussianPacket::new(1.5, 0.1, -100.0).unwrap();
        let t = 100.0;
        let grid = pk.grid(t, 0.0, 6.0, 801);
        let q = transmitted_quadrature(&pot, &pk, &grid, t).unwrap();
        let errs: Vec<f64> = [2, 8, 30]
            .iter()
            .map(|&n| {
                let set = PoleSet::with_pole_count(&pot, n, &PoleOptions::default()).unwrap();
                same_field(&transmitted_from_poles(&set, &pk, &grid, t).unwrap(), &q)
            })
            .collect();
        // truncation error falls roughly like 1/n without the analytic tail
        assert!(errs[0] > errs[1] && errs[2] < 0.35 * errs[1] && errs[2] < 0.05, "{errs:?}");
    }

    #[test]
    fn half_integer_pole_form() {
        let pot = dimless(-15.0 / 8.0);
        let pk = GaussianPacket::new(0.7, 0.1, -60.0).unwrap();
        let t = 80.0;
        let grid = pk.grid(t, 0.0, 6.0, 601);
        let q = transmitted_quadrature(&pot, &pk, &grid, t).unwrap();
        let p = transmitted_pole_form(&pot, &pk, &grid, t, 400).unwrap();
        assert!(same_field(&p, &q) < 1e-2, "{}", same_field(&p, &q));
    }

    #[test]
    fn interferometer_identity() {
        // psi^T = e^{i p0 x - i E0 t} \int G0(x - x', t) eta(p0, x') dx'
        let pot = dimless(1.0);
        let pk = GaussianPacket::new(1.5, 0.3, -30.0).unwrap();
        let t = 20.0;
        let grid = pk.grid(t, 0.0, 5.0, 201);
        let q = transmitted_quadrature(&pot, &pk, &grid, t).unwrap();
        let xs = uniform_grid(-40.0, 20.0, 6001);
        let eta = eta_spectral(&pot, pk.p0, &xs, &SpectralOptions::default()).unwrap();
        let e0 = pk.p0 * pk.p0 / 2.0;
        let conv: Vec<Complex> = grid
            .iter()
            .map(|&x| {
                let f: Vec<Complex> = xs.iter().zip(&eta.eta_smooth).map(|(&y, e)| free_envelope(&pk, x - y, t) * e).collect();
                Complex::from_polar(1.0, pk.p0 * x - e0 * t) * (free_envelope(&pk, x, t) + trapezoid(&xs, &f))
            })
            .collect();
        let phys = q.physical();
        assert!(relative_l2(&phys, &conv) < 1e-3, "{}", relative_l2(&phys, &conv));
    }

    #[test]
    fn classical_limit_com_shift() {
        // above-barrier passage with small alpha dx: COM shift equals the classical x~'
        let pot = dimless(1e5);
        let pk = GaussianPacket::new(700.0, 6.67, -4.0).unwrap();
        let t = 0.012;
        let shift = pot.classical_shift(pk.p0).unwrap().re;
        let grid = pk.grid(t, shift, 10.0, 4096);
        let d = com_delay(&pot, &pk, &grid, t).unwrap();
        assert!((d - shift).abs() < 0.01 * shift.abs(), "{d} vs {shift}");
        let sc = transmitted_semiclassical(&pot, &pk, &grid, t).unwrap();
        let q = transmitted_quadrature(&pot, &pk, &grid, t).unwrap();
        assert!(relative_l2(&sc.normalised().values, &q.values) < 0.05);
        assert!(arrival_time_difference(&pot, &pk, ArrivalMode::Classical).unwrap() > 0.0);
    }

    #[test]
    fn tunnelling_momentum_filtering() {
        let pot = dimless(1e4);
        let pk = GaussianPacket::new(50.0, 3.64, -4.0).unwrap();
        let dv = filtered_velocity_shift(&pot, &pk).unwrap();
        assert!(dv > 0.0);
        let shift = pot.classical_shift(pk.p0).unwrap();
        let predicted = 0.5 * pk.dp * pk.dp * shift.im;
        assert!((dv - predicted).abs() < 0.02 * predicted, "{dv} vs {predicted}");
    }

    #[test]
    fn com_additivity_in_tunnelling_closed_form() {
        let pot = dimless(1e4);
        let pk = GaussianPacket::new(50.0, 3.64, -4.0).unwrap();
        let shift = pot.classical_shift(pk.p0).unwrap();
        let dv = 0.5 * pk.dp * pk.dp * shift.im;
        let offsets: Vec<f64> = [0.17, 0.34]
            .iter()
            .map(|&t| {
                let grid = pk.grid(t, shift.re + dv * t, 12.0, 4001);
                let sc = transmitted_semiclassical(&pot, &pk, &grid, t).unwrap();
                let free = free_packet(&pk, &grid, t);
                com_position(&sc).unwrap() - com_position(&free).unwrap() - dv * t
            })
            .collect();
        assert!((offsets[0] - offsets[1]).abs() < 0.01 * offsets[0].abs());
        assert!((offsets[0] - shift.re).abs() < 1e-6 * shift.re.abs());
    }

    #[test]
    fn filtering_limit_matches_moment() {
        let pot = dimless(1.0);
        let x1 = delay_moments(&pot, 1.5, 1).unwrap();
        let mut prev = f64::INFINITY;
        for dp in [0.04, 0.02, 0.01] {
            let pk = GaussianPacket::new(1.5, dp, -50.0).unwrap();
            let dv = filtered_velocity_shift(&pot, &pk).unwrap();
            let rel = (dv / (x1.im * dp * dp / 2.0) - 1.0).abs();
            assert!(rel < prev);
            prev = rel;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn phase_time_classical_and_free() {
        let pot = dimless(-2e4);
        let pk = GaussianPacket::new(200.0, 6.67, -4.0).unwrap();
        let pt = phase_time_and_broad_com(&pot, &pk, 0.0).unwrap();
        let shift = pot.classical_shift(200.0).unwrap().re;
        assert!((-pk.velocity() * pt.tau_phase - shift).abs() < 1e-3 * shift);
        let free = phase_time_and_broad_com(&dimless(0.0), &pk, 1.0).unwrap();
        assert_eq!((free.tau_phase, free.com_prediction), (0.0, 0.0));
    }

    #[test]
    fn arrival_times() {
        let pk = GaussianPacket::new(200.0, 6.67, -4.0).unwrap();
        assert_eq!(arrival_time_difference(&dimless(0.0), &pk, ArrivalMode::Classical).unwrap(), 0.0);
        let adv = arrival_time_difference(&dimless(-2e4), &pk, ArrivalMode::Classical).unwrap();
        assert!((adv + 2f64.ln() / 200.0).abs() < 1e-9);
        let pk = GaussianPacket::new(50.0, 3.64, -4.0).unwrap();
        assert!(arrival_time_difference(&dimless(1e4), &pk, ArrivalMode::Classical).is_err());
        assert!(arrival_time_difference(&dimless(1e4), &pk, ArrivalMode::Tunnelling).unwrap() < 0.0);
    }

    #[test]
    fn pointer_demo() {
        let grid = uniform_grid(-8000.0, 8000.0, 160_001);
        let one = Complex::new(1.0, 0.0);
        assert!((double_slit_demo(one, one, 1e3, &grid).unwrap().mean_x - 1.5).abs() < 1e-9);
        assert!((double_slit_demo(one, Complex::default(), 1e3, &grid).unwrap().mean_x - 1.0).abs() < 1e-9);
        let eta2 = Complex::new(-99.0 / 98.0, 0.0);
        let r = double_slit_demo(one, eta2, 1e3, &grid).unwrap();
        assert!((r.broad_limit - 100.0).abs() < 1e-9);
        assert!((r.mean_x - 100.0).abs() < 5.0, "{}", r.mean_x);
        let which_way = double_slit_demo(one, eta2, 0.1, &uniform_grid(-2.0, 5.0, 70_001)).unwrap();
        assert!(which_way.mean_x > 1.0 && which_way.mean_x < 2.0);
        assert!(double_slit_demo(one, -one, 1e3, &grid).is_err());
    }

    #[test]
    fn field_csv_carries_log_scale() {
        let pk = GaussianPacket::new(1.0, 0.5, -3.0).unwrap();
        let f = free_packet(&pk, &uniform_grid(-6.0, 0.0, 11), 0.0);
        let t = f.table();
        assert_eq!(t.header, ["x", "re_psi", "im_psi", "abs2"]);
        assert_eq!(t.metadata[0].0, "log_scale");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn free_norm_is_conserved(p0 in 0.1f64..5.0, dp in 0.05f64..2.0, t in 0.0f64..100.0) {
            let pk = GaussianPacket::new(p0, dp, -10.0).unwrap();
            let grid = pk.grid(t, 0.0, 10.0, 4001);
            prop_assert!((free_packet(&pk, &grid, t).norm_sqr() - 1.0).abs() < 1e-8);
        }
    }
}
