//! Poles of the transmission amplitude in the complex momentum plane, their
//! residues, and the reconstruction of `T` from a pole sum.
//!
//! Two families exist: `k_n = i alpha (s - n)` and `k_n = -i alpha (n + s + 1)`,
//! `n = 0, 1, ...`. For integer `s = M` only the `M` bound-state poles of the first
//! family survive. For half-integer `s = M + 1/2` the families coincide from
//! `n = 2M + 2` onwards and the shared positions become double poles.

use std::f64::consts::PI;

use crate::csv_out::{fmt_float, CsvTable};
use crate::potential::EckartPotential;
use crate::special_fn::{digamma, harmonic, ln_gamma, ln_reciprocal_gamma, reciprocal_gamma, trigamma, LogComplex, EULER_GAMMA};
use crate::transmission::transmission_exact;
use crate::{Complex, Error, Result};

/// Default number of poles per family.
pub const DEFAULT_N_MAX: usize = 64;
/// Distance (in units of `alpha`) below which a pole is classed as a threshold pole.
pub const THRESHOLD_RADIUS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleKind {
    I,
    II,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleClass {
    Bound,
    Resonance,
    Threshold,
}

/// One singularity of `T(k)`.
///
/// Near the pole `T ~ residue/(k - position) + laurent2/(k - position)^2`;
/// `laurent2` vanishes for simple poles.
#[derive(Clone, Copy, Debug)]
pub struct Pole {
    pub position: Complex,
    pub residue: Complex,
    /// Residue in log form, finite even when `residue` overflows.
    pub ln_residue: LogComplex,
    pub laurent2: Complex,
    pub order: u8,
    pub kind: PoleKind,
    pub class: PoleClass,
    pub index: usize,
}

impl Pole {
    fn new(position: Complex, ln_residue: LogComplex, laurent2: Complex, order: u8, kind: PoleKind, index: usize, alpha: f64) -> Self {
        let class = if position.norm() < THRESHOLD_RADIUS * alpha {
            PoleClass::Threshold
        } else if position.im > 0.0 {
            PoleClass::Bound
        } else {
            PoleClass::Resonance
        };
        Pole { position, residue: ln_residue.to_complex(), ln_residue, laurent2, order, kind, class, index }
    }

    /// Contribution `residue/(k - k_n) + laurent2/(k - k_n)^2` to `T(k)`.
    pub fn contribution(&self, k: Complex) -> Complex {
        let d = k - self.position;
        self.residue / d + self.laurent2 / (d * d)
    }
}

/// Coalescence structure of the pole lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    Generic,
    /// `s = M`: a finite set of `M` bound poles.
    Integer(u32),
    /// `s = M + 1/2`, `M >= -1`: double poles from `n = 2M + 2`.
    HalfInteger(i64),
}

/// Tuning knobs for pole enumeration.
#[derive(Clone, Copy, Debug)]
pub struct PoleOptions {
    /// Distance of `s` from an integer or half-integer below which the
    /// degenerate formulas are used.
    pub merge_tol: f64,
}

impl Default for PoleOptions {
    fn default() -> Self {
        PoleOptions { merge_tol: 1e-8 }
    }
}

/// Classifies `s`, snapping it to the degenerate value when within `merge_tol`.
pub fn degeneracy(s: Complex, merge_tol: f64) -> (Degeneracy, Complex) {
    let m = s.re.round();
    if m >= 0.0 && (s - m).norm() <= merge_tol {
        return (Degeneracy::Integer(m as u32), Complex::new(m, 0.0));
    }
    let h = (s.re - 0.5).round();
    if h >= -1.0 && (s - (h + 0.5)).norm() <= merge_tol {
        return (Degeneracy::HalfInteger(h as i64), Complex::new(h + 0.5, 0.0));
    }
    (Degeneracy::Generic, s)
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(Complex::new(n as f64 + 1.0, 0.0)).map(|g| g.log_mag).unwrap_or(f64::INFINITY)
}

fn sign(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Res(k^I_n) = i alpha (-1)^n / n! * Gamma(2s - n + 1) / (Gamma(s - n) Gamma(s - n + 1))`.
pub(crate) fn simple_residue(s: Complex, n: usize, alpha: f64) -> Result<LogComplex> {
    let nf = n as f64;
    let g = ln_gamma(2.0 * s - nf + 1.0)?;
    let r = ln_reciprocal_gamma(s - nf) * ln_reciprocal_gamma(s - nf + 1.0);
    let pref = LogComplex::new(alpha.ln() - ln_factorial(n), 0.0) * LogComplex::from_complex(Complex::new(0.0, sign(n)));
    Ok(pref * g * r)
}

/// Laurent coefficients `(A1, A2)` of the double pole `k^I_n`, `n >= 2M + 2`, at `s = M + 1/2`.
fn double_pole_coefficients(m_half: i64, n: usize, alpha: f64) -> Result<(Complex, Complex)> {
    let m = n - (2 * m_half + 2) as usize;
    let z0 = m_half as f64 + 0.5 - n as f64;
    let ln_pre = LogComplex::new(-ln_factorial(n) - ln_factorial(m), 0.0)
        * ln_reciprocal_gamma(Complex::new(z0, 0.0))
        * ln_reciprocal_gamma(Complex::new(z0 + 1.0, 0.0));
    let pre = ln_pre.to_complex() * sign(n + m);
    let psi = |x: f64| digamma(Complex::new(x, 0.0)).map(|c| c.re);
    let bracket = psi(n as f64 + 1.0)? + psi(m as f64 + 1.0)? - psi(z0)? - psi(z0 + 1.0)?;
    let a2 = -alpha * alpha * pre;
    let a1 = Complex::new(0.0, alpha) * pre * bracket;
    Ok((a1, a2))
}

/// The closed-form double-pole residue in the form found in the literature,
/// `2 i alpha / (m! (m+2M+2)!) * (H_m + sum_{k=m+1}^{m+2M+2} 1/(2k) - gamma) / (Gamma(-m-M-3/2) Gamma(-m-M-1/2))`,
/// indexed by the double-pole counter `m = 0, 1, ...`.
///
/// Kept for comparison only: it differs from the Laurent coefficient obtained by
/// contour integration of `T`, which is what [`enumerate_poles`] uses.
pub fn double_pole_residue_as_printed(m_half: i64, m: usize, alpha: f64) -> Complex {
    let top = m + (2 * m_half + 2) as usize;
    let half_sum: f64 = (m + 1..=top).map(|k| 0.5 / k as f64).sum();
    let bracket = harmonic(m as u64) + half_sum - EULER_GAMMA;
    let base = -(m as f64) - m_half as f64;
    let gammas = reciprocal_gamma(Complex::new(base - 1.5, 0.0)) * reciprocal_gamma(Complex::new(base - 0.5, 0.0));
    let fact = (-ln_factorial(m) - ln_factorial(top)).exp();
    Complex::new(0.0, 2.0 * alpha) * fact * bracket * gammas
}

fn bernoulli2(x: Complex) -> Complex {
    x * x - x + 1.0 / 6.0
}

fn bernoulli3(x: Complex) -> Complex {
    x * x * x - 1.5 * x * x + 0.5 * x
}

/// Coefficients `(d1, d2)` of `R_n = 1 + d1/n + d2/n^2 + O(n^-3)`, where
/// `Res(k^I_n) = C R_n` and `R_n = Gamma(n+1-s) Gamma(n-s) / (n! Gamma(n-2s))`.
pub fn residue_expansion(s: Complex) -> (Complex, Complex) {
    let one = Complex::new(1.0, 0.0);
    let c1 = 0.5 * (bernoulli2(one - s) + bernoulli2(-s) - bernoulli2(one) - bernoulli2(-2.0 * s));
    let c2 = -(bernoulli3(one - s) + bernoulli3(-s) - bernoulli3(one) - bernoulli3(-2.0 * s)) / 6.0;
    (c1, c2 + 0.5 * c1 * c1)
}

/// `tan` evaluated without overflow for large imaginary parts.
fn tan_stable(z: Complex) -> Complex {
    let (x2, y2) = (2.0 * z.re, 2.0 * z.im);
    let sech = 1.0 / y2.cosh();
    Complex::new(x2.sin() * sech, y2.tanh()) / (x2.cos() * sech + 1.0)
}

/// Limit `C = i alpha tan(pi s) / (2 pi)` of the first-family residues as `n -> infinity`;
/// the second family tends to `-C`. Over a high barrier `C -> -alpha/(2 pi)`.
pub fn residue_limit(pot: &EckartPotential) -> Complex {
    Complex::new(0.0, pot.alpha) * tan_stable(PI * pot.s()) / (2.0 * PI)
}

/// Analytic remainder of the paired pole sum beyond index `n_start`.
#[derive(Clone, Copy, Debug)]
pub struct TailModel {
    pub n_start: usize,
    pub alpha: f64,
    pub s: Complex,
    pub limit: Complex,
    pub first: (Complex, Complex),
    pub second: (Complex, Complex),
}

impl TailModel {
    fn for_family(&self, a: Complex, (d1, d2): (Complex, Complex)) -> Result<Complex> {
        let n = self.n_start as f64;
        let psi_na = digamma(a + n)?;
        let psi_n = digamma(Complex::new(n, 0.0))?.re;
        let tri = trigamma(n);
        let (s1, s2) = if a.norm() < 1e-8 {
            (Complex::new(tri, 0.0), Complex::new(0.5 / (n * n), 0.0))
        } else {
            let s1 = (psi_na - psi_n) / a;
            (s1, (tri - s1) / a)
        };
        Ok(-psi_na + d1 * s1 + d2 * s2)
    }

    /// Sum of the omitted contributions of both families at momentum `k`.
    pub fn evaluate(&self, k: Complex) -> Result<Complex> {
        let z = -Complex::i() * k / self.alpha;
        let a = z - self.s;
        let a2 = z + 1.0 + self.s;
        let scale = self.limit / Complex::new(0.0, self.alpha);
        Ok(scale * (self.for_family(a, self.first)? - self.for_family(a2, self.second)?))
    }
}

/// Poles up to a truncation index, with the coalescence structure and the
/// optional analytic tail of the remaining poles.
#[derive(Clone, Debug)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    pub alpha: f64,
    pub s: Complex,
    pub n_max: usize,
    pub degeneracy: Degeneracy,
    pub tail: Option<TailModel>,
}

impl PoleSet {
    /// Enumerates every pole with index `n < n_max` in both families.
    pub fn build(pot: &EckartPotential, n_max: usize, opts: &PoleOptions) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::domain("n_max must be at least 1"));
        }
        let alpha = pot.alpha;
        let (deg, s) = degeneracy(pot.s(), opts.merge_tol);
        let mut poles = Vec::new();
        let mut tail = None;
        match deg {
            Degeneracy::Integer(m) => {
                for n in 0..(m as usize).min(n_max) {
                    let pos = Complex::new(0.0, alpha * (m as usize - n) as f64);
                    poles.push(Pole::new(pos, simple_residue(s, n, alpha)?, Complex::default(), 1, PoleKind::I, n, alpha));
                }
            }
            Degeneracy::HalfInteger(mh) => {
                let simple = (2 * mh + 2) as usize;
                for n in 0..n_max {
                    let pos = Complex::i() * alpha * (s - n as f64);
                    if n < simple {
                        poles.push(Pole::new(pos, simple_residue(s, n, alpha)?, Complex::default(), 1, PoleKind::I, n, alpha));
                    } else {
                        let (a1, a2) = double_pole_coefficients(mh, n, alpha)?;
                        poles.push(Pole::new(pos, LogComplex::from_complex(a1), a2, 2, PoleKind::I, n, alpha));
                    }
                }
            }
            Degeneracy::Generic => {
                let s2 = -1.0 - s;
                for n in 0..n_max {
                    let nf = n as f64;
                    let p1 = Complex::i() * alpha * (s - nf);
                    poles.push(Pole::new(p1, simple_residue(s, n, alpha)?, Complex::default(), 1, PoleKind::I, n, alpha));
                    let p2 = Complex::i() * alpha * (s2 - nf);
                    poles.push(Pole::new(p2, simple_residue(s2, n, alpha)?, Complex::default(), 1, PoleKind::II, n, alpha));
                }
                if n_max as f64 >= (s * (s + 1.0)).norm() + 1.0 && n_max as f64 > s.re.abs() + 2.0 {
                    tail = Some(TailModel {
                        n_start: n_max,
                        alpha,
                        s,
                        limit: residue_limit(pot),
                        first: residue_expansion(s),
                        second: residue_expansion(s2),
                    });
                }
            }
        }
        Ok(PoleSet { poles, alpha, s, n_max, degeneracy: deg, tail })
    }

    /// Pole set holding `count` poles in total, split evenly between the families.
    pub fn with_pole_count(pot: &EckartPotential, count: usize, opts: &PoleOptions) -> Result<Self> {
        PoleSet::build(pot, count.div_ceil(2).max(1), opts)
    }

    /// Whether the set represents `T` exactly (finite pole sum).
    pub fn is_exact(&self) -> bool {
        matches!(self.degeneracy, Degeneracy::Integer(_))
    }

    pub fn bound(&self) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(|p| p.class == PoleClass::Bound)
    }
}

/// All poles with index `n < n_max` using default options.
pub fn enumerate_poles(pot: &EckartPotential, n_max: usize) -> Result<Vec<Pole>> {
    Ok(PoleSet::build(pot, n_max, &PoleOptions::default())?.poles)
}

/// Distance from `k` to the nearest pole of `T` (infinite when there are none).
pub fn nearest_pole_distance(pot: &EckartPotential, k: Complex) -> f64 {
    let n_max = 8 + pot.s().re.abs().ceil() as usize;
    PoleSet::build(pot, n_max, &PoleOptions::default())
        .map(|set| set.poles.iter().map(|p| (p.position - k).norm()).fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::INFINITY)
}

/// `T(k) = 1 + sum_n contributions`, without any tail correction.
pub fn pole_sum_raw(poles: &[Pole], k: Complex) -> Complex {
    poles.iter().fold(Complex::new(1.0, 0.0), |acc, p| acc + p.contribution(k))
}

/// Pole-sum reconstruction of `T(p)`, including the analytic tail when the set carries one.
pub fn pole_sum_transmission(set: &PoleSet, p: f64) -> Result<Complex> {
    let k = Complex::new(p, 0.0);
    let mut t = pole_sum_raw(&set.poles, k);
    if let Some(tail) = &set.tail {
        t += tail.evaluate(k)?;
    }
    Ok(t)
}

/// Result of an escalated pole sum.
#[derive(Clone, Copy, Debug)]
pub struct ConvergedSum {
    pub value: Complex,
    pub n_max: usize,
    /// Change of the estimate over the last doubling of `n_max`.
    pub change: f64,
}

/// Doubles `n_max` from [`DEFAULT_N_MAX`] until the pole sum changes by less
/// than `rel_tol` relative to its magnitude.
pub fn pole_sum_converged(pot: &EckartPotential, p: f64, rel_tol: f64, opts: &PoleOptions) -> Result<ConvergedSum> {
    const MAX_N: usize = 1 << 17;
    let mut n = DEFAULT_N_MAX;
    let mut prev = pole_sum_transmission(&PoleSet::build(pot, n, opts)?, p)?;
    loop {
        let set = PoleSet::build(pot, 2 * n, opts)?;
        let next = pole_sum_transmission(&set, p)?;
        let change = (next - prev).norm();
        if set.is_exact() || change <= rel_tol * next.norm() {
            return Ok(ConvergedSum { value: next, n_max: 2 * n, change });
        }
        n *= 2;
        if n >= MAX_N {
            return Err(Error::numerical(
                "poles",
                format!("pole sum at p = {p} did not converge to {rel_tol:e}; last change {change:e} at n_max = {n}"),
            ));
        }
        prev = next;
    }
}

/// `Res(k^I_n)` over a high barrier (`U0 > alpha^2/(8 mu)`), which tends to `-alpha/(2 pi)` for large `n`.
pub fn residue_asymptote(pot: &EckartPotential, n: usize) -> Result<Complex> {
    if pot.beta().is_none() {
        return Err(Error::domain("residue asymptote requires U0 > alpha^2/(8 mu)"));
    }
    Ok(simple_residue(pot.s(), n, pot.alpha)?.to_complex())
}

/// `Res(k^II_n)` over a high barrier; equals `-Res(k^I_n)*`.
pub fn residue_second_family(pot: &EckartPotential, n: usize) -> Result<Complex> {
    Ok(simple_residue(-1.0 - pot.s(), n, pot.alpha)?.to_complex())
}

/// Pole table with columns `n, kind, order, Re k, Im k, Re Res, Im Res`.
pub fn pole_table(poles: &[Pole]) -> CsvTable {
    let mut t = CsvTable::new(&["n", "kind", "order", "re_k", "im_k", "re_res", "im_res"], 0.0, "k=alpha;res=alpha");
    for p in poles {
        let kind = match p.kind {
            PoleKind::I => "I",
            PoleKind::II => "II",
        };
        t.push_row(vec![
            p.index.to_string(),
            kind.to_string(),
            p.order.to_string(),
            fmt_float(p.position.re),
            fmt_float(p.position.im),
            fmt_float(p.residue.re),
            fmt_float(p.residue.im),
        ]);
    }
    t
}

/// Contour average `(1/2 pi i) \oint T(k) (k - k0)^power dk` on a circle of radius `r`.
pub fn contour_coefficient(pot: &EckartPotential, k0: Complex, r: f64, power: i32, points: usize) -> Result<Complex> {
    let mut acc = Complex::default();
    for j in 0..points {
        let w = Complex::from_polar(r, 2.0 * PI * (j as f64 + 0.5) / points as f64);
        acc += transmission_exact(pot, k0 + w)?.to_complex() * w.powi(power + 1);
    }
    Ok(acc / points as f64)
}
