//! Residue sums over one family of the pole lattice in extended precision.
//!
//! The residues of one family follow `Res_n = Res_0 P_n` with
//! `P_{n+1}/P_n = (n + 1 - s)(n - s) / ((n - 2s)(n + 1))`, so the weighted sum
//! `sum_n P_n q^n` is a hypergeometric series. Over high barriers its terms
//! grow to `~exp(|s| q / 2)` before they decay while the sum stays of order
//! one, so the working precision is raised until it covers that cancellation.

use dashu_base::EstimatedLog2;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::special_fn::LogComplex;
use crate::Complex;

type F = FBig<HalfEven, 2>;

/// Bits kept beyond the cancellation depth.
const GUARD_BITS: usize = 64;
const START_BITS: usize = 128;

#[derive(Clone)]
struct Wide {
    re: F,
    im: F,
}

impl Wide {
    fn new(z: Complex, bits: usize) -> Self {
        let conv = |v: f64| F::try_from(v).expect("finite input").with_precision(bits).value();
        Wide { re: conv(z.re), im: conv(z.im) }
    }

    fn add(&self, o: &Wide) -> Wide {
        Wide { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn mul(&self, o: &Wide) -> Wide {
        Wide { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    fn div(&self, o: &Wide) -> Wide {
        let den = &o.re * &o.re + &o.im * &o.im;
        let re = &self.re * &o.re + &self.im * &o.im;
        let im = &self.im * &o.re - &self.re * &o.im;
        Wide { re: re / &den, im: im / &den }
    }

    fn log2_norm(&self) -> f32 {
        let est = |v: &F| if v.repr().is_zero() { f32::NEG_INFINITY } else { v.log2_est() };
        est(&self.re).max(est(&self.im))
    }

    /// `ln|z|` and `arg z` without overflow.
    fn to_log(&self) -> LogComplex {
        let e = self.log2_norm();
        if e == f32::NEG_INFINITY {
            return LogComplex::new(f64::NEG_INFINITY, 0.0);
        }
        let shift = e.floor() as isize;
        let scale = |v: &F| (v.clone() >> shift).to_f64().value();
        let l = LogComplex::from_complex(Complex::new(scale(&self.re), scale(&self.im)));
        LogComplex::new(l.log_mag + shift as f64 * std::f64::consts::LN_2, l.phase)
    }
}

/// Which lattice indices enter the sum and when to stop.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Range {
    /// Every `n < end`.
    Below(usize),
    /// Every `n >= start` until the terms are negligible, but never past `cap`.
    From { start: usize, cap: usize },
}

struct Pass {
    sum: Wide,
    stop: usize,
    /// `log2` of the largest term over the final sum.
    depth: f32,
}

fn run(s: Complex, q: f64, range: Range, bits: usize) -> Pass {
    let minus_s = Wide::new(-s, bits);
    let q = Wide::new(Complex::new(q, 0.0), bits);
    let one = Wide::new(Complex::new(1.0, 0.0), bits);
    let two = Wide::new(Complex::new(2.0, 0.0), bits);
    let mut term = one.clone();
    let mut sum = Wide::new(Complex::new(0.0, 0.0), bits);
    let mut peak = f32::NEG_INFINITY;
    let mut n = 0usize;
    loop {
        let (take, done) = match range {
            Range::Below(end) => (n < end, n >= end),
            Range::From { start, cap } => (n >= start, n >= cap),
        };
        if done {
            break;
        }
        if take {
            sum = sum.add(&term);
            peak = peak.max(term.log2_norm());
        }
        let nf = Wide::new(Complex::new(n as f64, 0.0), bits);
        let a = minus_s.add(&nf);
        let num = a.add(&one).mul(&a);
        let den = minus_s.mul(&two).add(&nf).mul(&nf.add(&one));
        let step = num.div(&den).mul(&q);
        term = term.mul(&step);
        n += 1;
        let t = term.log2_norm();
        if t == f32::NEG_INFINITY {
            break;
        }
        if let Range::From { start, .. } = range {
            // once the ratio settles below one the rest is a convergent geometric tail
            if n > start && step.log2_norm() < -0.01 && t < sum.log2_norm() - 120.0 {
                break;
            }
        }
    }
    let depth = peak - sum.log2_norm();
    Pass { sum, stop: n, depth }
}

/// `sum_n P_n q^n` over `range` in log form, plus the index where summation stopped.
pub(crate) fn weighted_sum(s: Complex, q: f64, range: Range) -> (LogComplex, usize) {
    let mut bits = START_BITS;
    loop {
        let pass = run(s, q, range, bits);
        if !pass.depth.is_finite() || pass.depth.max(0.0) as usize + GUARD_BITS <= bits {
            return (pass.sum.to_log(), pass.stop);
        }
        bits = pass.depth as usize + GUARD_BITS + 32;
    }
}
