//! The delay-amplitude distribution `eta(p0, x') = delta(x') + eta~(p0, x')`.
//!
//! `eta~ = exp(-i p0 x') xi(x')` with `xi(x) = (1/2 pi) \int (T(k) - 1) exp(i k x) dk`.
//! Two independent constructions are provided: a spectral one (direct Fourier
//! integral) and a pole one (residue sum). Both use the mean of the one-sided
//! limits at `x' = 0`, where `xi` jumps by `mu J`. The delta weight is never
//! discretised; every integral adds it analytically.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::csv_out::CsvTable;
use crate::lattice::{weighted_sum, Range};
use crate::poles::{
    degeneracy, nearest_pole_distance, residue_expansion, residue_limit, simple_residue, Degeneracy, PoleOptions, PoleSet,
    TailModel,
};
use crate::potential::EckartPotential;
use crate::quadrature::{composite_gauss_legendre, gauss_legendre, trapezoid};
use crate::special_fn::{expm1_c, faddeeva, trigamma, LogComplex};
use crate::transmission::transmission_exact;
use crate::{Complex, Error, Result};

/// Sampled smooth part of the delay distribution plus the symbolic delta weight.
#[derive(Clone, Debug)]
pub struct DelayDistribution {
    pub x_grid: Vec<f64>,
    pub eta_smooth: Vec<Complex>,
    pub delta_weight: Complex,
    pub p0: f64,
}

impl DelayDistribution {
    fn from_xi(x_grid: &[f64], p0: f64, xi: Vec<Complex>) -> Self {
        let eta_smooth = x_grid.iter().zip(xi).map(|(&x, v)| Complex::from_polar(1.0, -p0 * x) * v).collect();
        DelayDistribution { x_grid: x_grid.to_vec(), eta_smooth, delta_weight: Complex::new(1.0, 0.0), p0 }
    }

    /// Trapezoid integral of `eta~` over the grid.
    pub fn integral(&self) -> Complex {
        trapezoid(&self.x_grid, &self.eta_smooth)
    }

    /// `delta_weight + \int eta~ dx'`, which should reproduce `T(p0)`.
    pub fn sum_rule(&self) -> Complex {
        self.delta_weight + self.integral()
    }

    /// The same distribution for another momentum: only the phase `exp(-i p0 x')` changes.
    pub fn at_momentum(&self, p0: f64) -> Self {
        let eta_smooth = self
            .x_grid
            .iter()
            .zip(&self.eta_smooth)
            .map(|(&x, v)| Complex::from_polar(1.0, -(p0 - self.p0) * x) * v)
            .collect();
        DelayDistribution { x_grid: self.x_grid.clone(), eta_smooth, delta_weight: self.delta_weight, p0 }
    }

    /// CSV table with columns `x', Re eta~, Im eta~, Re avg, Im avg`.
    pub fn table(&self, window: f64) -> Result<CsvTable> {
        let avg = running_average(self, window)?;
        let mut t = CsvTable::new(&["x", "re_eta", "im_eta", "re_avg", "im_avg"], 0.0, "x=1/alpha;eta=alpha")
            .with_meta("p0", self.p0)
            .with_meta("window", window);
        for ((x, e), a) in self.x_grid.iter().zip(&self.eta_smooth).zip(avg) {
            t.push_floats(&[*x, e.re, e.im, a.re, a.im]);
        }
        Ok(t)
    }
}

/// `n` equally spaced points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
}

/// Relative L2 distance `||a - b|| / ||b||` between two sample vectors.
pub fn relative_l2(a: &[Complex], b: &[Complex]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

// ---------------------------------------------------------------------------
// Spectral route

/// Options of the spectral construction.
#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    /// Split point between the real-axis integral and the rotated tail.
    pub k_max: Option<f64>,
    /// Gauss-Legendre order per panel.
    pub order: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { k_max: None, order: 16 }
    }
}

/// Default split point: beyond every scale of `T` and large enough that
/// `|T|` stays of order one along the rotated contour.
pub fn default_k_max(pot: &EckartPotential, p0: f64) -> f64 {
    let a = pot.alpha;
    let mut k = (50.0 * a).max(10.0 * p0).max(0.1 * (pot.mu * pot.integral()).abs());
    if let Some(b) = pot.beta() {
        k = k.max(2.0 * b + 20.0 * a);
    }
    k
}

/// Precomputed quadrature of `r(k) = T(k) - 1 - a(k)` with the asymptote
/// `a(k) = -i mu J k / (k^2 + alpha^2)` removed.
struct SpectralKernel {
    half_jump: f64,
    alpha: f64,
    cut: f64,
    real: Vec<(f64, Complex)>,
    up: Vec<(f64, Complex)>,
    down: Vec<(f64, Complex)>,
}

impl SpectralKernel {
    fn build(pot: &EckartPotential, x_extent: f64, cut: f64, order: usize) -> Result<Self> {
        let alpha = pot.alpha;
        let muj = pot.mu * pot.integral();
        let remainder = |k: Complex| -> Result<Complex> {
            let t_minus_one = expm1_c(transmission_exact(pot, k)?.ln());
            Ok(t_minus_one + Complex::i() * muj * k / (k * k + alpha * alpha))
        };

        // panels shrink towards k = 0 when a pole sits close to the real axis
        let gap = nearest_pole_distance(pot, Complex::new(0.0, 0.0)).clamp(1e-9 * alpha, 0.5 * alpha);
        let base = (0.5 * alpha).min(8.0 / x_extent.max(1.0 / alpha));
        let mut edges = vec![0.0];
        let mut e: f64 = 0.0;
        while e < cut {
            e = (e + e.max(gap).min(base)).min(cut);
            edges.push(e);
        }
        let (nodes, weights) = composite_gauss_legendre(&edges, order);
        let real = nodes
            .par_iter()
            .zip(weights.par_iter())
            .map(|(&k, &w)| remainder(Complex::new(k, 0.0)).map(|r| (k, r * w)))
            .collect::<Result<Vec<_>>>()?;

        let mut y_edges = vec![0.0];
        let mut y = 0.05 * alpha;
        let y_max = 1e9 * alpha.max(cut);
        while y < y_max {
            y_edges.push(y);
            y *= 2.0;
        }
        y_edges.push(y_max);
        let (ynodes, yweights) = composite_gauss_legendre(&y_edges, order);
        let ray = |dir: f64| {
            ynodes
                .par_iter()
                .zip(yweights.par_iter())
                .map(|(&y, &w)| {
                    let k = Complex::new(cut, dir * y);
                    remainder(k).map(|r| (y, Complex::new(0.0, dir) * r * w))
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(SpectralKernel { half_jump: 0.5 * muj, alpha, cut, real, up: ray(1.0)?, down: ray(-1.0)? })
    }

    fn tail(&self, x: f64) -> Complex {
        let (ray, sign) = if x >= 0.0 { (&self.up, -1.0) } else { (&self.down, 1.0) };
        let mut tail = Complex::new(0.0, 0.0);
        for &(y, wr) in ray {
            let damp = (sign * y * x).exp();
            if damp < 1e-300 {
                break;
            }
            tail += wr * damp;
        }
        tail * Complex::from_polar(1.0, self.cut * x)
    }

    /// `xi` on a run of consecutive grid points. Equally spaced runs advance
    /// the Fourier phases by multiplication instead of fresh `sin`/`cos` calls.
    fn xi_block(&self, xs: &[f64]) -> Vec<f64> {
        let step = if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 };
        let uniform = xs.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step.abs().max(xs[0].abs()));
        let mut acc = vec![Complex::new(0.0, 0.0); xs.len()];
        if uniform {
            for &(k, wr) in &self.real {
                let rot = Complex::from_polar(1.0, k * step);
                let mut e = wr * Complex::from_polar(1.0, k * xs[0]);
                for a in acc.iter_mut() {
                    *a += e;
                    e *= rot;
                }
            }
        } else {
            for (a, &x) in acc.iter_mut().zip(xs) {
                for &(k, wr) in &self.real {
                    *a += wr * Complex::from_polar(1.0, k * x);
                }
            }
        }
        xs.iter()
            .zip(acc)
            .map(|(&x, a)| {
                let analytic = if x == 0.0 { 0.0 } else { self.half_jump * x.signum() * (-self.alpha * x.abs()).exp() };
                analytic + (a + self.tail(x)).re / PI
            })
            .collect()
    }
}

/// `eta~` by direct Fourier inversion of `T - 1`.
///
/// The asymptote `-i mu J k/(k^2 + alpha^2)` is removed and transformed in closed
/// form. The remainder is integrated on `[0, k_max]` with composite Gauss-Legendre
/// panels. Beyond `k_max` the contour is turned onto the vertical line `Re k = k_max`,
/// upwards for `x' > 0` and downwards for `x' < 0`, where the integrand decays
/// exponentially. No pole lies between the two paths.
pub fn eta_spectral(pot: &EckartPotential, p0: f64, x_grid: &[f64], opts: &SpectralOptions) -> Result<DelayDistribution> {
    if pot.u0 == 0.0 {
        return Ok(DelayDistribution::from_xi(x_grid, p0, vec![Complex::default(); x_grid.len()]));
    }
    let cut = opts.k_max.unwrap_or_else(|| default_k_max(pot, p0));
    if let Some(b) = pot.beta() {
        if cut <= b + 5.0 * pot.alpha {
            return Err(Error::domain(format!("k_max = {cut} must exceed the resonance ridge at |Re k| = {b}")));
        }
    }
    let extent = x_grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let kernel = SpectralKernel::build(pot, extent, cut, opts.order)?;
    let xi: Vec<Complex> = x_grid
        .par_chunks(64)
        .flat_map_iter(|block| kernel.xi_block(block).into_iter().map(|v| Complex::new(v, 0.0)))
        .collect();
    Ok(DelayDistribution::from_xi(x_grid, p0, xi))
}

// ---------------------------------------------------------------------------
// Pole route

/// `sum_{n >= N} q^n / n^order` for `q = exp(t)`, `t < 0`, `order` in {1, 2}.
fn polylog_tail(t: f64, n_start: usize, order: i32) -> f64 {
    let q = t.exp();
    if q <= 0.95 {
        let mut acc = 0.0;
        let mut n = n_start as f64;
        let mut qn = (t * n).exp();
        loop {
            let term = qn / n.powi(order);
            acc += term;
            if term < 1e-18 * acc || qn == 0.0 {
                return acc;
            }
            n += 1.0;
            qn *= q;
        }
    }
    let one_minus_q = -t.exp_m1();
    let full = if order == 1 {
        -one_minus_q.ln()
    } else if q > 0.5 {
        // Li2(q) = pi^2/6 - ln q ln(1-q) - Li2(1-q)
        let mut li = 0.0;
        let mut pw = 1.0;
        for k in 1..200 {
            pw *= one_minus_q;
            li += pw / (k * k) as f64;
            if pw < 1e-18 {
                break;
            }
        }
        PI * PI / 6.0 - t * one_minus_q.ln() - li
    } else {
        unreachable!("q > 0.95 here")
    };
    let mut partial = 0.0;
    let mut qn = 1.0;
    for n in 1..n_start {
        qn *= q;
        partial += qn / (n as f64).powi(order);
    }
    full - partial
}

/// Omitted poles of both families for `x <= 0` in resummed form.
fn lower_tail(tail: &TailModel, x: f64) -> Complex {
    let (s, s2) = (tail.s, -1.0 - tail.s);
    let ((d1, d2), (e1, e2)) = (tail.first, tail.second);
    let c = tail.limit;
    if x == 0.0 {
        return c * (s - s2) + c * (d2 - e2) * trigamma(tail.n_start as f64);
    }
    let t = tail.alpha * x;
    let g1 = (-t * s).exp();
    let g2 = (-t * s2).exp();
    let diff = g2 * expm1_c(-t * (s - s2));
    let lead = (t * tail.n_start as f64).exp() / (-t.exp_m1()) * diff;
    let l1 = polylog_tail(t, tail.n_start, 1);
    let l2 = polylog_tail(t, tail.n_start, 2);
    c * (lead + l1 * (d1 * g1 - e1 * g2) + l2 * (d2 * g1 - e2 * g2))
}

fn pole_term(p: &crate::poles::Pole, x: f64) -> Complex {
    let phase = Complex::i() * p.position * x;
    let simple = if p.ln_residue.is_zero() {
        Complex::default()
    } else {
        (p.ln_residue.ln() + phase).exp()
    };
    if p.order == 2 {
        simple + p.laurent2 * Complex::i() * x * phase.exp()
    } else {
        simple
    }
}

fn pole_xi(set: &PoleSet, x: f64) -> Complex {
    let upper = |x: f64| -> Complex {
        Complex::i() * set.poles.iter().filter(|p| p.position.im >= 0.0).map(|p| pole_term(p, x)).sum::<Complex>()
    };
    let lower = |x: f64| -> Complex {
        let mut acc: Complex = set.poles.iter().filter(|p| p.position.im < 0.0).map(|p| pole_term(p, x)).sum();
        if let Some(t) = &set.tail {
            acc += lower_tail(t, x);
        }
        -Complex::i() * acc
    };
    if x > 0.0 {
        upper(x)
    } else if x < 0.0 {
        lower(x)
    } else {
        0.5 * (upper(0.0) + lower(0.0))
    }
}

/// Number of indices `n` whose pole `i alpha (s - n)` lies in the closed upper half-plane.
fn upper_count(s: Complex) -> usize {
    if s.re >= 0.0 {
        s.re.floor() as usize + 1
    } else {
        0
    }
}

/// Pole-sum evaluation for simple poles, one lattice family at a time.
struct LatticeRoute {
    alpha: f64,
    jump: f64,
    cap: usize,
    /// `(s, ln Res_0)` per family.
    families: Vec<(Complex, LogComplex)>,
    tail: TailModel,
}

impl LatticeRoute {
    fn new(pot: &EckartPotential, s: Complex, integer: bool, cap: usize) -> Result<Self> {
        let alpha = pot.alpha;
        let mut families = vec![(s, simple_residue(s, 0, alpha)?)];
        if !integer {
            let s2 = -1.0 - s;
            families.push((s2, simple_residue(s2, 0, alpha)?));
        }
        families.retain(|(_, r)| !r.is_zero());
        let tail = TailModel {
            n_start: cap,
            alpha,
            s,
            limit: residue_limit(pot),
            first: residue_expansion(s),
            second: residue_expansion(-1.0 - s),
        };
        Ok(LatticeRoute { alpha, jump: pot.mu * pot.integral(), cap, families, tail })
    }

    fn side(&self, x: f64, upper: bool) -> Complex {
        let q = (self.alpha * x).exp();
        let mut acc = Complex::new(0.0, 0.0);
        let mut reached_cap = false;
        for &(s, res0) in &self.families {
            let count = upper_count(s);
            let range = if upper { Range::Below(count) } else { Range::From { start: count, cap: self.cap } };
            let (sum, stop) = weighted_sum(s, q, range);
            reached_cap |= !upper && stop >= self.cap;
            if !sum.is_zero() {
                acc += (res0.ln() + sum.ln() - self.alpha * s * x).exp();
            }
        }
        if upper {
            Complex::i() * acc
        } else {
            if reached_cap && x < 0.0 && self.families.len() == 2 {
                acc += lower_tail(&self.tail, x);
            }
            -Complex::i() * acc
        }
    }

    fn xi(&self, x: f64) -> Complex {
        if x > 0.0 {
            self.side(x, true)
        } else if x < 0.0 {
            self.side(x, false)
        } else {
            // xi jumps by mu J at the origin; the mean of the limits is returned
            self.side(0.0, true) - 0.5 * self.jump
        }
    }
}

/// `eta~` from the residue sum: bound-state poles build `x' > 0`, the lower
/// half-plane poles build `x' < 0`.
///
/// For simple poles the sum over each family is carried in double-double
/// precision until it converges, with at least `n_max` and at most
/// `max(n_max, 2^20)` terms; anything beyond is resummed analytically. When
/// `s` is a half-integer the double-pole lattice of [`PoleSet`] is summed up to
/// `n_max` instead.
pub fn eta_pole(pot: &EckartPotential, p0: f64, x_grid: &[f64], n_max: usize) -> Result<DelayDistribution> {
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    if pot.u0 == 0.0 {
        return Ok(DelayDistribution::from_xi(x_grid, p0, vec![Complex::default(); x_grid.len()]));
    }
    let (deg, s) = degeneracy(pot.s(), PoleOptions::default().merge_tol);
    if let Degeneracy::HalfInteger(_) = deg {
        let set = PoleSet::build(pot, n_max, &PoleOptions::default())?;
        return eta_from_poles(&set, p0, x_grid);
    }
    let route = LatticeRoute::new(pot, s, matches!(deg, Degeneracy::Integer(_)), n_max.max(1 << 20))?;
    let xi: Vec<Complex> = x_grid.par_iter().map(|&x| route.xi(x)).collect();
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("delay", "pole sum overflowed"));
    }
    Ok(DelayDistribution::from_xi(x_grid, p0, xi))
}

/// `eta~` from an explicit pole set.
pub fn eta_from_poles(set: &PoleSet, p0: f64, x_grid: &[f64]) -> Result<DelayDistribution> {
    let xi: Vec<Complex> = x_grid.par_iter().map(|&x| pole_xi(set, x)).collect();
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("delay", "pole sum overflowed; residues exceed the floating-point range"));
    }
    Ok(DelayDistribution::from_xi(x_grid, p0, xi))
}

/// Closed form for a high barrier, `x' <= 0`:
/// `eta~ = exp(-i p0 x)/(2 pi) [F(x) - alpha sin(beta x)/sinh(alpha x/2)]`, with
/// `F = 4 pi sum_n exp((n+1/2) alpha x) Im{(Res_n + alpha/2 pi) exp(-i beta x)}`
/// truncated after `n_terms` terms. At `x' = 0` the value is half the left limit,
/// the mean of the one-sided limits, as in the other constructions.
pub fn eta_barrier_closed_form(pot: &EckartPotential, p0: f64, x_grid: &[f64], n_terms: usize) -> Result<DelayDistribution> {
    let beta = pot.beta().ok_or_else(|| Error::domain("closed form requires U0 > alpha^2/(8 mu)"))?;
    if let Some(x) = x_grid.iter().find(|&&x| x > 0.0) {
        return Err(Error::domain(format!("closed form holds for x <= 0 only, grid contains {x}")));
    }
    if n_terms == 0 {
        return Err(Error::domain("n_terms must be at least 1"));
    }
    let a = pot.alpha;
    let s = pot.s();
    let res0 = simple_residue(s, 0, a)?;
    let jump = pot.mu * pot.integral();
    let xi = x_grid
        .par_iter()
        .map(|&x| {
            if x == 0.0 {
                // the series tends to -mu J as x -> 0-, and xi(0+) = 0
                return Complex::new(-0.5 * jump, 0.0);
            }
            let t = a * x;
            // sum_{n < N} (Res_n + alpha/2pi) q^n with the residues carried by the lattice sum
            let (sum, _) = weighted_sum(s, t.exp(), Range::From { start: 0, cap: n_terms });
            let geometric = (n_terms as f64 * t).exp_m1() / t.exp_m1() * (a / (2.0 * PI));
            let series = (res0.ln() + sum.ln()).exp() + geometric;
            let f = 4.0 * PI * (series * Complex::from_polar((0.5 * t).exp(), -beta * x)).im;
            let ratio = (beta * x).sin() / (0.5 * t).sinh();
            Complex::new((f - a * ratio) / (2.0 * PI), 0.0)
        })
        .collect();
    Ok(DelayDistribution::from_xi(x_grid, p0, xi))
}

// ---------------------------------------------------------------------------
// Derived quantities

/// `y^-1 \int_{x'}^{x'+y} eta~ dx''` at every grid point; windows running past
/// the grid end are slid back to end there.
pub fn running_average(dist: &DelayDistribution, y: f64) -> Result<Vec<Complex>> {
    let xs = &dist.x_grid;
    let (first, last) = match (xs.first(), xs.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::domain("empty grid")),
    };
    if !(y > 0.0) || y > last - first {
        return Err(Error::domain(format!("window {y} must be positive and within the grid span {}", last - first)));
    }
    let mut cum = vec![Complex::default(); xs.len()];
    for i in 1..xs.len() {
        cum[i] = cum[i - 1] + (dist.eta_smooth[i] + dist.eta_smooth[i - 1]) * (0.5 * (xs[i] - xs[i - 1]));
    }
    let at = |x: f64| -> Complex {
        let j = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[j - 1], xs[j]);
        let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        cum[j - 1] * (1.0 - w) + cum[j] * w
    };
    Ok(xs
        .iter()
        .map(|&x| {
            let (a, b) = if x + y > last { (last - y, last) } else { (x, x + y) };
            (at(b) - at(a)) / y
        })
        .collect())
}

/// Stationary point `x~'(p0) = -dPhi/dp` of the semiclassical phase; complex under the barrier top.
pub fn stationary_delay(pot: &EckartPotential, p0: f64) -> Result<Complex> {
    pot.classical_shift(p0)
}

/// First and second derivatives of `ln T` at `p0`: five-point central
/// differences of `ln(T(p)/T(p0))` with one Richardson step.
pub fn log_transmission_derivatives(pot: &EckartPotential, p0: f64) -> Result<(Complex, Complex)> {
    if !(p0 > 0.0) {
        return Err(Error::domain(format!("momentum must be positive, got {p0}")));
    }
    let t0 = transmission_exact(pot, Complex::new(p0, 0.0))?;
    if t0.is_zero() || !t0.log_mag.is_finite() {
        return Err(Error::domain(format!("T({p0}) vanishes; moments are undefined")));
    }
    // T may vanish at k = 0 and is singular at its poles; the step stays well inside both
    let h = 0.05 * pot.alpha.min(p0).min(nearest_pole_distance(pot, Complex::new(p0, 0.0)));
    let g = |dp: f64| -> Result<Complex> { Ok((transmission_exact(pot, Complex::new(p0 + dp, 0.0))? / t0).ln()) };
    let stencil = |h: f64| -> Result<(Complex, Complex)> {
        let (m2, m1, p1, p2) = (g(-2.0 * h)?, g(-h)?, g(h)?, g(2.0 * h)?);
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 + 16.0 * p1 - p2) / (12.0 * h * h);
        Ok((d1, d2))
    };
    let (a1, a2) = stencil(h)?;
    let (b1, b2) = stencil(0.5 * h)?;
    Ok(((16.0 * b1 - a1) / 15.0, (16.0 * b2 - a2) / 15.0))
}

/// Complex moments `T^-1 (i d/dp)^m T` at `p0`, `m` in {1, 2}.
pub fn delay_moments(pot: &EckartPotential, p0: f64, m: u32) -> Result<Complex> {
    let (d1, d2) = log_transmission_derivatives(pot, p0)?;
    match m {
        1 => Ok(Complex::i() * d1),
        2 => Ok(-(d2 + d1 * d1)),
        _ => Err(Error::domain(format!("moment order must be 1 or 2, got {m}"))),
    }
}

/// `1 + \int eta~ dx'` over `[-reach, reach]`, integrated with Gauss-Legendre
/// panels on each side of the origin where `eta~` jumps. Tends to `T(p0)`.
pub fn sum_rule_quadrature(pot: &EckartPotential, p0: f64, reach: f64) -> Result<Complex> {
    if !(reach > 0.0) {
        return Err(Error::domain(format!("reach must be positive, got {reach}")));
    }
    let scale = p0.abs() + pot.beta().unwrap_or(0.0) + pot.alpha;
    let panels = (reach * scale / 2.0).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..=panels).map(|i| -reach + reach * i as f64 / panels as f64).collect();
    edges.extend((1..=panels).map(|i| reach * i as f64 / panels as f64));
    let (nodes, weights) = composite_gauss_legendre(&edges, 16);
    let dist = eta_spectral(pot, p0, &nodes, &SpectralOptions::default())?;
    Ok(dist.delta_weight + dist.eta_smooth.iter().zip(&weights).map(|(e, w)| e * w).sum::<Complex>())
}

/// Effective range `sqrt(|T''/T|)` of the delay integral.
pub fn effective_range(pot: &EckartPotential, p0: f64) -> Result<f64> {
    Ok(delay_moments(pot, p0, 2)?.norm().sqrt())
}

/// `\int exp(-x'^2/z^2) eta dx'`, the delay integral restricted to a Gaussian window of width `z`.
pub fn truncated_transmission(dist: &DelayDistribution, z: f64) -> Result<Complex> {
    if !(z > 0.0) {
        return Err(Error::domain(format!("window width must be positive, got {z}")));
    }
    let peak = dist.eta_smooth.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    for i in [0, dist.x_grid.len() - 1] {
        let window = (-(dist.x_grid[i] / z).powi(2)).exp();
        if window > 1e-6 && dist.eta_smooth[i].norm() > 1e-8 * peak {
            return Err(Error::domain(format!(
                "grid edge x' = {} is too close for window width {z}",
                dist.x_grid[i]
            )));
        }
    }
    let weighted: Vec<Complex> =
        dist.x_grid.iter().zip(&dist.eta_smooth).map(|(x, v)| v * (-(x / z).powi(2)).exp()).collect();
    Ok(dist.delta_weight + trapezoid(&dist.x_grid, &weighted))
}

/// Integral and moments of the alternating toy distribution
/// `rho(x) = (1/2 + eps) exp(-x) - exp(-2x)` on `x >= 0`.
#[derive(Clone, Copy, Debug)]
pub struct ToyRange {
    /// `\int exp(-x^2/z^2) rho dx`.
    pub windowed_integral: f64,
    /// `\int rho dx = eps`.
    pub total: f64,
    pub mean: f64,
    pub second_moment: f64,
}

pub fn toy_range_demo(epsilon: f64, z: f64) -> Result<ToyRange> {
    if !(epsilon > 0.0 && z > 0.0) {
        return Err(Error::domain("epsilon and z must be positive"));
    }
    // \int_0^inf exp(-x^2/z^2 - a x) dx = (z sqrt(pi)/2) erfcx(a z/2)
    let window = |a: f64| 0.5 * z * PI.sqrt() * faddeeva(Complex::new(0.0, 0.5 * a * z)).re;
    Ok(ToyRange {
        windowed_integral: (0.5 + epsilon) * window(1.0) - window(2.0),
        total: epsilon,
        mean: (0.25 + epsilon) / epsilon,
        second_moment: (0.75 + 2.0 * epsilon) / epsilon,
    })
}

/// One pole retained by a near-threshold model.
#[derive(Clone, Copy, Debug)]
pub struct ModelPole {
    pub position: Complex,
    pub residue: Complex,
}

/// Few-pole model valid for `|s - M| << 1` and `p0 << alpha`.
///
/// `M` bound poles at `i alpha (M - n)` carry their integer-`s` residues, and
/// the pole at `i alpha (s - M)` carries `i alpha (-1)^M (s - M)`, its residue to
/// first order in `s - M`.
#[derive(Clone, Debug)]
pub struct NearThresholdModel {
    pub level: u32,
    pub p0: f64,
    pub poles: Vec<ModelPole>,
    pub t_model: Complex,
    /// COM shift corrected for momentum filtering, `Re` of the first moment of the model.
    pub com_delay_model: f64,
    pub x2_moment: Complex,
    pub within_validity: bool,
}

impl NearThresholdModel {
    /// Model `eta~(x')`.
    pub fn eta(&self, x: f64) -> Complex {
        let side = |upper: bool, x: f64| -> Complex {
            let sum: Complex = self
                .poles
                .iter()
                .filter(|p| (p.position.im >= 0.0) == upper)
                .map(|p| p.residue * (Complex::i() * p.position * x).exp())
                .sum();
            if upper {
                Complex::i() * sum
            } else {
                -Complex::i() * sum
            }
        };
        let xi = if x > 0.0 {
            side(true, x)
        } else if x < 0.0 {
            side(false, x)
        } else {
            0.5 * (side(true, 0.0) + side(false, 0.0))
        };
        Complex::from_polar(1.0, -self.p0 * x) * xi
    }

    /// `T` of the model at momentum `p`.
    pub fn transmission(&self, p: f64) -> Complex {
        1.0 + self.poles.iter().map(|q| q.residue / (p - q.position)).sum::<Complex>()
    }
}

pub fn near_threshold_model(pot: &EckartPotential, p0: f64, level: u32) -> Result<NearThresholdModel> {
    let s = pot.s();
    if s.im != 0.0 {
        return Err(Error::domain("near-threshold models need a real s (well or low barrier)"));
    }
    let (a, m, delta) = (pot.alpha, level as usize, s.re - level as f64);
    let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let mut bound = Vec::new();
    for n in 0..m {
        let mag = (ln_fact(2 * m - n) - ln_fact(n) - ln_fact(m - n) - ln_fact(m - n - 1)).exp();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        bound.push(ModelPole { position: Complex::new(0.0, a * (m - n) as f64), residue: Complex::new(0.0, a * sign * mag) });
    }
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let threshold = ModelPole { position: Complex::new(0.0, a * delta), residue: Complex::new(0.0, a * sign_m * delta) };

    let k = Complex::new(p0, 0.0);
    let b: Complex = 1.0 + bound.iter().map(|q| q.residue / (k - q.position)).sum::<Complex>();
    let db: Complex = -bound.iter().map(|q| q.residue / (k - q.position).powi(2)).sum::<Complex>();
    let com_delay_model = a * delta / (a * a * delta * delta + p0 * p0) + (Complex::i() * db / b).re;

    let mut poles = bound;
    poles.push(threshold);
    let t_model = 1.0 + poles.iter().map(|q| q.residue / (k - q.position)).sum::<Complex>();
    let t2: Complex = poles.iter().map(|q| 2.0 * q.residue / (k - q.position).powi(3)).sum();
    Ok(NearThresholdModel {
        level,
        p0,
        poles,
        t_model,
        com_delay_model,
        x2_moment: -t2 / t_model,
        within_validity: delta.abs() < 0.1 && p0 / a < 0.1,
    })
}

/// Gauss-Legendre nodes on `[a, b]` (re-exported for callers building their own grids).
pub fn gauss_nodes(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|v| c + h * v).collect(), w.iter().map(|v| h * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::transmission::transmission_complex;
    use proptest::prelude::*;

    fn dimless(u: f64) -> EckartPotential {
        EckartPotential::dimensionless(u)
    }

    fn in_range(dist: &DelayDistribution, lo: f64, hi: f64) -> Vec<Complex> {
        dist.x_grid.iter().zip(&dist.eta_smooth).filter(|(x, _)| **x >= lo && **x <= hi).map(|(_, v)| *v).collect()
    }

    #[test]
    fn free_particle_has_no_smooth_part() {
        let grid = uniform_grid(-3.0, 3.0, 61);
        let pot = dimless(0.0);
        assert!(eta_spectral(&pot, 1.0, &grid, &SpectralOptions::default()).unwrap().eta_smooth.iter().all(|v| v.norm() == 0.0));
        assert!(eta_pole(&pot, 1.0, &grid, 16).unwrap().eta_smooth.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn spectral_sum_rule_low_barrier() {
        let pot = dimless(1.0);
        let grid = uniform_grid(-60.0, 20.0, 16001);
        let dist = eta_spectral(&pot, 1.5, &grid, &SpectralOptions::default()).unwrap();
        let t = transmission_complex(&pot, 1.5).unwrap();
        assert!((dist.sum_rule() - t).norm() / t.norm() < 1e-4, "{} vs {t}", dist.sum_rule());
    }

    #[test]
    fn spectral_sum_rule_well() {
        let pot = dimless(-2.2);
        let grid = uniform_grid(-40.0, 100.0, 28001);
        let dist = eta_spectral(&pot, 0.8, &grid, &SpectralOptions::default()).unwrap();
        let t = transmission_complex(&pot, 0.8).unwrap();
        assert!((dist.sum_rule() - t).norm() / t.norm() < 1e-4, "{} vs {t}", dist.sum_rule());
    }

    #[test]
    fn routes_agree_for_low_barrier() {
        let pot = dimless(1.0);
        let grid = uniform_grid(-5.0, 5.0, 401);
        let spec = eta_spectral(&pot, 1.5, &grid, &SpectralOptions::default()).unwrap();
        let pole = eta_pole(&pot, 1.5, &grid, 64).unwrap();
        let err = relative_l2(&pole.eta_smooth, &spec.eta_smooth);
        assert!(err < 1e-3, "relative L2 {err}");
        let closed = eta_barrier_closed_form(&pot, 1.5, &uniform_grid(-5.0, 0.0, 201), 4000).unwrap();
        let err = relative_l2(&closed.eta_smooth, &in_range(&spec, -5.0, 0.0));
        assert!(err < 1e-3, "closed form relative L2 {err}");
    }

    #[test]
    fn routes_agree_for_generic_well() {
        let pot = dimless(-2.2);
        let grid = uniform_grid(-5.0, 5.0, 401);
        let spec = eta_spectral(&pot, 0.9, &grid, &SpectralOptions::default()).unwrap();
        let pole = eta_pole(&pot, 0.9, &grid, 64).unwrap();
        assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-3);
    }

    #[test]
    fn integer_well_supports_positive_side_only() {
        let pot = dimless(-15.0);
        let grid = uniform_grid(-5.0, 5.0, 201);
        let pole = eta_pole(&pot, 0.5, &grid, 64).unwrap();
        for (x, v) in grid.iter().zip(&pole.eta_smooth) {
            if *x < 0.0 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        let spec = eta_spectral(&pot, 0.5, &grid, &SpectralOptions::default()).unwrap();
        assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-6);
    }

    #[test]
    fn barrier_supports_negative_side_only() {
        let grid = uniform_grid(-3.0, 3.0, 61);
        let pole = eta_pole(&dimless(30.0), 2.0, &grid, 64).unwrap();
        for (x, v) in grid.iter().zip(&pole.eta_smooth) {
            if *x > 0.0 {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }

    #[test]
    fn half_integer_well_uses_double_poles() {
        // s = 3/2; double-pole sums converge like 1/N, so only the outer region is compared tightly
        let pot = dimless(-15.0 / 8.0);
        let grid = uniform_grid(-5.0, -0.5, 91);
        let spec = eta_spectral(&pot, 0.7, &grid, &SpectralOptions::default()).unwrap();
        let pole = eta_pole(&pot, 0.7, &grid, 200).unwrap();
        assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-6);
    }

    #[test]
    fn closed_form_convergence_and_domain() {
        let pot = dimless(30.0);
        let grid = [-1.0];
        let a = eta_barrier_closed_form(&pot, 2.0, &grid, 100).unwrap().eta_smooth[0];
        let b = eta_barrier_closed_form(&pot, 2.0, &grid, 200).unwrap().eta_smooth[0];
        assert!((a - b).norm() < 1e-6);
        assert!(eta_barrier_closed_form(&pot, 2.0, &[0.5], 10).is_err());
        assert!(eta_barrier_closed_form(&dimless(0.05), 2.0, &[-0.5], 10).is_err());
        let near = eta_barrier_closed_form(&pot, 2.0, &[-1e-9, 0.0], 4000).unwrap();
        assert!(near.eta_smooth.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn finite_at_origin_under_refinement() {
        // the one-sided limits differ by mu J = 2; the origin carries their mean
        let pot = dimless(1.0);
        let jump = pot.mu * pot.integral();
        for n in [41, 161, 641] {
            let dist = eta_spectral(&pot, 1.5, &uniform_grid(-1.0, 1.0, n), &SpectralOptions::default()).unwrap();
            let max = dist.eta_smooth.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            assert!(max <= jump * (1.0 + 1e-6));
            assert!((dist.eta_smooth[n / 2] + 0.5 * jump).norm() < 1e-6);
        }
    }

    #[test]
    fn running_average_basics() {
        let grid = uniform_grid(0.0, 10.0, 101);
        let dist = DelayDistribution {
            x_grid: grid.clone(),
            eta_smooth: vec![Complex::new(2.0, -1.0); grid.len()],
            delta_weight: Complex::new(1.0, 0.0),
            p0: 1.0,
        };
        for v in running_average(&dist, 1.5).unwrap() {
            assert!((v - Complex::new(2.0, -1.0)).norm() < 1e-12);
        }
        assert!(running_average(&dist, 20.0).is_err());
        let zero = DelayDistribution { eta_smooth: vec![Complex::default(); grid.len()], ..dist };
        assert!(running_average(&zero, 1.0).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn phase_factor_law() {
        let pot = dimless(1.0);
        let grid = uniform_grid(-4.0, 1.0, 51);
        let a = eta_pole(&pot, 1.5, &grid, 32).unwrap().at_momentum(0.7);
        let b = eta_pole(&pot, 0.7, &grid, 32).unwrap();
        assert!(relative_l2(&a.eta_smooth, &b.eta_smooth) < 1e-14);
    }

    #[test]
    fn stationary_delay_values() {
        assert_eq!(stationary_delay(&dimless(0.0), 1.0).unwrap(), Complex::new(0.0, 0.0));
        // closed form ln(1 - 2 mu U0 / p0^2)/alpha
        let x = stationary_delay(&dimless(-2e4), 200.0).unwrap();
        assert!((x.re - 2f64.ln()).abs() < 1e-8 && x.im == 0.0);
    }

    #[test]
    fn moments_of_single_level_well() {
        // s = 1: T = (ip - 1)/(ip + 1), x1 = 2/(1+p^2), x2 = 4(1 - ip)/(1+p^2)^2
        let pot = dimless(-1.0);
        for p in [0.001, 0.3, 2.0] {
            let x1 = delay_moments(&pot, p, 1).unwrap();
            let x2 = delay_moments(&pot, p, 2).unwrap();
            let d = 1.0 + p * p;
            assert!((x1 - Complex::new(2.0 / d, 0.0)).norm() < 1e-8, "p = {p}: {x1}");
            assert!((x2 - Complex::new(4.0, -4.0 * p) / (d * d)).norm() < 1e-6, "p = {p}: {x2}");
        }
        assert!((effective_range(&pot, 1e-3).unwrap() - 2.0).abs() < 1e-3);
        assert_eq!(delay_moments(&dimless(0.0), 1.0, 1).unwrap(), Complex::new(0.0, 0.0));
        assert!(delay_moments(&pot, 1.0, 3).is_err());
    }

    #[test]
    fn first_moment_components() {
        let pot = dimless(0.7);
        let p = 1.1;
        let x1 = delay_moments(&pot, p, 1).unwrap();
        let h = 1e-5;
        let lt = |q: f64| transmission_exact(&pot, Complex::new(q, 0.0)).unwrap();
        let dlog = (lt(p + h).log_mag - lt(p - h).log_mag) / (2.0 * h);
        let darg = (lt(p + h).phase - lt(p - h).phase) / (2.0 * h);
        assert!((x1.re + darg).abs() < 1e-7 && (x1.im - dlog).abs() < 1e-7);
    }

    #[test]
    fn second_moment_matches_single_level_model() {
        let pot = dimless(-1.0);
        let model = near_threshold_model(&pot, 0.001, 1).unwrap();
        let x2 = delay_moments(&pot, 0.001, 2).unwrap();
        assert!((model.x2_moment - x2).norm() < 0.05 * x2.norm());
    }

    #[test]
    fn truncated_transmission_limits() {
        let pot = dimless(1.0);
        let grid = uniform_grid(-60.0, 20.0, 16001);
        let dist = eta_spectral(&pot, 1.5, &grid, &SpectralOptions::default()).unwrap();
        let t = transmission_complex(&pot, 1.5).unwrap();
        assert!((truncated_transmission(&dist, 1e4).unwrap() - t).norm() < 1e-3 * t.norm());
        assert!((truncated_transmission(&dist, 1e-4).unwrap() - 1.0).norm() < 1e-2);
        let short = eta_spectral(&pot, 1.5, &uniform_grid(-2.0, 2.0, 81), &SpectralOptions::default()).unwrap();
        assert!(truncated_transmission(&short, 10.0).is_err());
    }

    #[test]
    fn toy_distribution() {
        let toy = toy_range_demo(0.01, 100.0).unwrap();
        assert_eq!(toy.total, 0.01);
        assert!((toy.mean - 26.0).abs() < 1e-12);
        assert!((toy.windowed_integral - 0.01).abs() / 0.01 < 1e-2);
        let rho = |x: f64| (-(x / 100.0f64).powi(2)).exp() * (0.51 * (-x).exp() - (-2.0 * x).exp());
        let direct = integrate(rho, 0.0, 60.0, 1e-15, 1e-13).unwrap().value;
        assert!((toy.windowed_integral - direct).abs() < 1e-12);
    }

    #[test]
    fn near_threshold_examples() {
        let m = near_threshold_model(&dimless(-1e-12), 0.01, 0).unwrap();
        assert!((m.t_model - 1.0).norm() < 1e-6);
        let m = near_threshold_model(&dimless(-1.0), 1e-4, 1).unwrap();
        assert!((m.com_delay_model - 2.0).abs() < 1e-3);
        // low barrier with s = -p0/alpha gives the largest delay 1/(2 p0)
        let p0 = 0.005;
        let u = 0.5 * p0 * (1.0 - p0);
        let m = near_threshold_model(&dimless(u), p0, 0).unwrap();
        assert!((m.com_delay_model + 1.0 / (2.0 * p0)).abs() < 1e-6 / p0);
        assert!(m.within_validity);
    }

    #[test]
    fn threshold_residue_is_linear_in_detuning() {
        for m in 1..=3u32 {
            let delta = 1e-6;
            let s = m as f64 + delta;
            let pot = dimless(-s * (s + 1.0) / 2.0);
            let set = PoleSet::build(&pot, m as usize + 1, &PoleOptions { merge_tol: 0.0 }).unwrap();
            let exact = set.poles.iter().find(|p| p.kind == crate::poles::PoleKind::I && p.index == m as usize).unwrap();
            let model = near_threshold_model(&pot, 0.01, m).unwrap();
            let last = model.poles.last().unwrap();
            assert!((exact.residue / last.residue - 1.0).norm() < 1e-4, "M = {m}");
        }
    }

    #[test]
    fn model_reproduces_exact_transmission_nearby() {
        let s: f64 = 2.0 + 1e-4;
        let pot = dimless(-s * (s + 1.0) / 2.0);
        let model = near_threshold_model(&pot, 1e-4, 2).unwrap();
        let t = transmission_complex(&pot, 1e-4).unwrap();
        assert!((model.t_model - t).norm() < 1e-3);
        let x = model.eta(0.7);
        assert!(x.is_finite());
    }

    #[test]
    fn csv_table() {
        let pot = dimless(1.0);
        let dist = eta_pole(&pot, 1.5, &uniform_grid(-2.0, 2.0, 21), 16).unwrap();
        let t = dist.table(0.5).unwrap();
        assert_eq!(t.header, ["x", "re_eta", "im_eta", "re_avg", "im_avg"]);
        assert_eq!(t.rows.len(), 21);
    }

    #[test]
    fn routes_agree_for_high_barrier() {
        let pot = dimless(1e4);
        let grid = uniform_grid(-5.0, 5.0, 401);
        let spec = eta_spectral(&pot, 50.0, &grid, &SpectralOptions::default()).unwrap();
        let pole = eta_pole(&pot, 50.0, &grid, 64).unwrap();
        assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-6);
        // away from the origin, where the value -mu J / 2 dominates the norm
        let inner = |d: &DelayDistribution| in_range(d, -5.0, -0.01);
        assert!(relative_l2(&inner(&pole), &inner(&spec)) < 1e-6);
        let left = uniform_grid(-5.0, 0.0, 201);
        let closed = eta_barrier_closed_form(&pot, 50.0, &left, 1 << 20).unwrap();
        assert!(relative_l2(&closed.eta_smooth, &in_range(&spec, -5.0, 0.0)) < 1e-6);
    }

    #[test]
    fn gauss_sum_rule_resolves_small_transmission() {
        let pot = dimless(5.0);
        let t = transmission_complex(&pot, 0.3).unwrap();
        let total = sum_rule_quadrature(&pot, 0.3, 70.0).unwrap();
        assert!((total - t).norm() < 1e-6 * t.norm(), "{total} vs {t}");
        assert!(sum_rule_quadrature(&pot, 0.3, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn pole_and_spectral_routes_agree(log_u in -0.7f64..4.0, p0 in 0.3f64..4.0) {
            let pot = dimless(10f64.powf(log_u));
            let grid = uniform_grid(-5.0, 5.0, 201);
            let spec = eta_spectral(&pot, p0, &grid, &SpectralOptions::default()).unwrap();
            let pole = eta_pole(&pot, p0, &grid, 64).unwrap();
            prop_assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-3);
            let inner = |d: &DelayDistribution| in_range(d, -5.0, -0.01);
            prop_assert!(relative_l2(&inner(&pole), &inner(&spec)) < 1e-3);
        }

        #[test]
        fn pole_route_for_wells(u in 0.05f64..40.0, p0 in 0.3f64..4.0) {
            let pot = dimless(-u);
            let grid = uniform_grid(-5.0, 5.0, 201);
            let spec = eta_spectral(&pot, p0, &grid, &SpectralOptions::default()).unwrap();
            let pole = eta_pole(&pot, p0, &grid, 64).unwrap();
            prop_assert!(relative_l2(&pole.eta_smooth, &spec.eta_smooth) < 1e-3);
        }
    }
}
