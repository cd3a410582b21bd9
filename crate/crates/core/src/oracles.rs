//! Brute-force checks that share no code path with the analytic machinery:
//! direct integration of the stationary Schrodinger equation for `T`, and
//! split-operator time propagation for transmitted packets.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::csv_out::{fmt_float, CsvTable};
use crate::potential::EckartPotential;
use crate::wavepacket::{free_packet, transmitted_quadrature, GaussianPacket, WaveField};
use crate::{Complex, Error, Result};

/// One primary-versus-oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub primary: Complex,
    pub oracle: Complex,
    pub abs_diff: f64,
    pub rel_diff: f64,
    /// Human-readable resolution settings, e.g. `L=40;h=0.01`.
    pub resolution: String,
}

impl OracleReport {
    /// Scalar comparison; the discrepancies follow from the stored values.
    pub fn scalar(quantity: &str, primary: Complex, oracle: Complex, resolution: String) -> Self {
        let abs_diff = (primary - oracle).norm();
        let rel_diff = if oracle.norm() > 0.0 { abs_diff / oracle.norm() } else { abs_diff };
        OracleReport { quantity: quantity.into(), primary, oracle, abs_diff, rel_diff, resolution }
    }

    /// Field comparison: the stored values are the two L2 norms and the
    /// discrepancies are `||a - b||` and `||a - b|| / ||b||`.
    pub fn field(quantity: &str, primary: &[Complex], oracle: &[Complex], resolution: String) -> Self {
        let l2 = |v: &mut dyn Iterator<Item = f64>| v.sum::<f64>().sqrt();
        let a = l2(&mut primary.iter().map(|z| z.norm_sqr()));
        let b = l2(&mut oracle.iter().map(|z| z.norm_sqr()));
        let abs_diff = l2(&mut primary.iter().zip(oracle).map(|(x, y)| (x - y).norm_sqr()));
        OracleReport {
            quantity: quantity.into(),
            primary: Complex::new(a, 0.0),
            oracle: Complex::new(b, 0.0),
            abs_diff,
            rel_diff: if b > 0.0 { abs_diff / b } else { abs_diff },
            resolution,
        }
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.rel_diff < rel_tol
    }
}

/// Writes reports as CSV rows.
pub fn report_table(reports: &[OracleReport]) -> CsvTable {
    let mut t = CsvTable::new(
        &["quantity", "re_primary", "im_primary", "re_oracle", "im_oracle", "abs_diff", "rel_diff", "resolution"],
        0.0,
        "dimensionless",
    );
    for r in reports {
        let mut row = vec![r.quantity.clone()];
        row.extend([r.primary.re, r.primary.im, r.oracle.re, r.oracle.im, r.abs_diff, r.rel_diff].map(fmt_float));
        row.push(r.resolution.clone());
        t.push_row(row);
    }
    t
}

// ---------------------------------------------------------------------------
// Stationary equation

/// Half-width beyond which the potential tail shifts the phase by less than `1e-12`.
pub fn default_half_width(pot: &EckartPotential, p: f64) -> f64 {
    let scale = 4.0 * pot.u0.abs() * pot.mu / (pot.alpha * p.max(1e-3));
    ((scale / 1e-12).max(1.0).ln() / (2.0 * pot.alpha)).max(10.0 / pot.alpha)
}

/// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B_LOW: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

type State = [Complex; 2];

/// `T(p)` from integrating `psi'' = 2 mu (V - E) psi` from a pure outgoing
/// wave at `+L` back to `-L` and projecting onto incident and reflected waves.
///
/// Steps are adaptive (Dormand-Prince, relative tolerance `1e-12`) and never
/// exceed `step` or a twentieth of the local wavelength.
pub fn transmission_ode_oracle(pot: &EckartPotential, p: f64, half_width: f64, step: f64) -> Result<Complex> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("the ODE oracle needs E > 0 (p = {p})")));
    }
    if !(half_width > 0.0 && step > 0.0) {
        return Err(Error::domain("half width and step must be positive"));
    }
    let energy = pot.energy(p);
    let rhs = |x: f64, y: &State| -> State { [y[1], 2.0 * pot.mu * (pot.evaluate(x) - energy) * y[0]] };
    let max_step = |x: f64| {
        let q = (2.0 * pot.mu * (energy - pot.evaluate(x))).abs().sqrt();
        step.min(2.0 * PI / q.max(1e-300) / 20.0)
    };
    let ik = Complex::new(0.0, p);
    let mut x = half_width;
    let outgoing = Complex::from_polar(1.0, p * x);
    let mut y: State = [outgoing, ik * outgoing];
    let mut h = -max_step(x);
    let (rtol, atol) = (1e-12, 1e-300);
    let mut accepted = 0usize;
    while x > -half_width {
        if accepted > 50_000_000 {
            return Err(Error::numerical("oracles", "ODE oracle exceeded its step budget"));
        }
        h = -h.abs().min(max_step(x)).min(x + half_width);
        let mut k = [[Complex::default(); 2]; 7];
        k[0] = rhs(x, &y);
        for i in 1..7 {
            let mut yi = y;
            for j in 0..i {
                for c in 0..2 {
                    yi[c] += h * A[i][j] * k[j][c];
                }
            }
            k[i] = rhs(x + C[i] * h, &yi);
        }
        let mut high = y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut low = y[c];
            for i in 0..7 {
                high[c] += h * A[6].get(i).copied().unwrap_or(0.0) * k[i][c];
                low += h * B_LOW[i] * k[i][c];
            }
            let scale = atol + rtol * y[c].norm().max(high[c].norm());
            err = err.max((high[c] - low).norm() / scale);
        }
        if !err.is_finite() {
            return Err(Error::numerical("oracles", format!("ODE integration blew up at x = {x}")));
        }
        if err <= 1.0 {
            x += h;
            y = high;
            accepted += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * half_width {
            return Err(Error::numerical("oracles", format!("ODE step collapsed at x = {x}")));
        }
    }
    let incident = 0.5 * (y[0] + y[1] / ik) * Complex::from_polar(1.0, -p * x);
    if incident.norm() == 0.0 || !incident.norm().is_finite() {
        return Err(Error::numerical("oracles", "incident amplitude is degenerate"));
    }
    Ok(incident.inv())
}

/// Runs the ODE oracle against `primary` and packages the comparison.
pub fn check_transmission(pot: &EckartPotential, p: f64, primary: Complex) -> Result<OracleReport> {
    let half_width = default_half_width(pot, p);
    let step = 0.05 / pot.alpha;
    let oracle = transmission_ode_oracle(pot, p, half_width, step)?;
    Ok(OracleReport::scalar(&format!("T(p={p})"), primary, oracle, format!("L={half_width};h={step}")))
}

// ---------------------------------------------------------------------------
// Time propagation

/// Periodic propagation grid and the schedule of one split-step run.
///
/// The packet starts as a free packet at `t_start < 0`, far enough left that
/// the potential is negligible, is propagated under the full Hamiltonian to
/// `t_clear` when the transmitted part has left the potential on the right,
/// and its `x > 0` part is then moved freely to the requested time.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub t_start: f64,
    pub t_clear: f64,
}

impl SplitGrid {
    /// Grid and schedule sized for `packet` observed at time `t`.
    pub fn for_scenario(pot: &EckartPotential, packet: &GaussianPacket, t: f64) -> Result<Self> {
        if packet.p0 < 10.0 * packet.dp {
            return Err(Error::domain(format!(
                "split-step needs p0 >= 10 dp to separate transmitted from slow components (p0 = {}, dp = {})",
                packet.p0, packet.dp
            )));
        }
        let v = packet.velocity();
        let p_hi = packet.p0 + 8.0 * packet.dp;
        let q_max = (p_hi * p_hi + 2.0 * pot.mu * (-pot.u0).max(0.0)).sqrt();
        let h = PI / (1.6 * q_max);
        let v_lo = (packet.p0 - 4.0 * packet.dp).max(0.5 * packet.p0) / pot.mu;
        let tail = 4.0 * pot.u0.abs() / (2.0 * pot.alpha * v_lo * 1e-7);
        let clear = (tail.max(1.0).ln() / (2.0 * pot.alpha)).max(5.0 / pot.alpha);
        // fixed points of "centre = edge +- 8 spreads"
        let mut t_start = 0.0f64;
        let mut t_clear = t.max(0.0);
        for _ in 0..8 {
            t_start = ((-clear - 8.0 * packet.spread(t_start) - packet.x0) / v).min(0.0);
            t_clear = ((clear + 8.0 * packet.spread(t_clear) - packet.x0) / v).max(t_clear);
        }
        let left = packet.x0 + v * t_start - 8.0 * packet.spread(t_start);
        let right = (packet.x0 + v * t_clear + 8.0 * packet.spread(t_clear))
            .max(packet.x0 + v * t + 8.0 * packet.spread(t) + clear);
        let reflected = -(packet.x0 + v * t_clear) - 8.0 * packet.spread(t_clear);
        let x_min = left.min(reflected.max(left - 2.0 * clear));
        let span = (right - x_min) / 0.8;
        let x_min = x_min - 0.1 * span;
        let points = ((span / h).ceil() as usize).next_power_of_two().max(256);
        Ok(SplitGrid { x_min, x_max: x_min + span, points, t_start, t_clear })
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x_min + i as f64 * self.spacing()).collect()
    }

    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n).map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk).collect()
    }

    /// Time step giving a kinetic phase of at most five radians per fourth-order step
    pub fn suggested_dt(&self, pot: &EckartPotential, packet: &GaussianPacket) -> f64 {
        let p_hi = packet.p0 + 8.0 * packet.dp;
        let e_max = (p_hi * p_hi / (2.0 * pot.mu)) + pot.u0.abs();
        // and a momentum kick per step well inside the packet's momentum width
        let max_force = 4.0 / (3.0 * 3f64.sqrt()) * pot.u0.abs() * pot.alpha;
        (5.0 / e_max).min(0.25 * packet.dp / max_force.max(1e-300))
    }
}

/// `cos^2` ramp over the outer tenth of each side of the grid.
fn absorbing_mask(x: &[f64], grid: &SplitGrid) -> Vec<f64> {
    let width = 0.1 * (grid.x_max - grid.x_min);
    x.iter()
        .map(|&xi| {
            let depth = ((grid.x_min + width - xi).max(xi - (grid.x_max - width)) / width).clamp(0.0, 1.0);
            (0.5 * PI * depth).cos().powi(2)
        })
        .collect()
}

/// Result of a split-step run before comparison.
#[derive(Clone, Debug)]
pub struct SplitStepRun {
    /// Transmitted part of the wave function at the requested time.
    pub field: WaveField,
    /// Norm lost in the right absorbing layer (should be negligible).
    pub absorbed_right: f64,
    /// Norm lost in the left absorbing layer (reflected probability reaching the edge).
    pub absorbed_left: f64,
    /// Largest relative norm drift while nothing was absorbed.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Transmitted packet at time `t` by fourth-order split-operator propagation
/// (Yoshida composition of Strang steps) with time step `dt` on `grid`.
pub fn split_step_oracle(pot: &EckartPotential, packet: &GaussianPacket, grid: &SplitGrid, t: f64, dt: f64) -> Result<SplitStepRun> {
    if !(dt > 0.0) || grid.points < 16 || !(grid.x_max > grid.x_min) {
        return Err(Error::domain("split-step needs dt > 0 and a non-trivial grid"));
    }
    let n = grid.points;
    let x = grid.nodes();
    let k = grid.wavenumbers();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let cbrt2 = 2f64.cbrt();
    let weights = [1.0 / (2.0 - cbrt2), -cbrt2 / (2.0 - cbrt2)];
    let interval = grid.t_clear - grid.t_start;
    let steps = (interval / dt).ceil().max(1.0) as usize;
    let tau = interval / steps as f64;
    let phases = |w: f64| -> (Vec<Complex>, Vec<Complex>) {
        let half_v = x.iter().map(|&xi| Complex::from_polar(1.0, -0.5 * w * tau * pot.evaluate(xi))).collect();
        let kin = k.iter().map(|&kj| Complex::from_polar(1.0, -w * tau * kj * kj / (2.0 * pot.mu)) / n as f64).collect();
        (half_v, kin)
    };
    let outer = phases(weights[0]);
    let inner = phases(weights[1]);
    let mask = absorbing_mask(&x, grid);
    let mid = 0.5 * (grid.x_min + grid.x_max);

    let mut psi = free_packet(packet, &x, grid.t_start).physical();
    let norm = |v: &[Complex]| v.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
    let n0 = norm(&psi);
    let (mut absorbed_left, mut absorbed_right, mut drift) = (0.0, 0.0, 0.0f64);
    let strang = |psi: &mut Vec<Complex>, (v, kin): &(Vec<Complex>, Vec<Complex>)| {
        psi.iter_mut().zip(v).for_each(|(a, b)| *a *= b);
        forward.process(psi);
        psi.iter_mut().zip(kin).for_each(|(a, b)| *a *= b);
        inverse.process(psi);
        psi.iter_mut().zip(v).for_each(|(a, b)| *a *= b);
    };
    for _ in 0..steps {
        let before = norm(&psi);
        strang(&mut psi, &outer);
        strang(&mut psi, &inner);
        strang(&mut psi, &outer);
        let after = norm(&psi);
        if absorbed_left + absorbed_right == 0.0 {
            drift = drift.max((after - before).abs() / n0);
        }
        for ((z, m), xi) in psi.iter_mut().zip(&mask).zip(&x) {
            if *m < 1.0 {
                let lost = z.norm_sqr() * (1.0 - m * m) * grid.spacing() / n0;
                if *xi < mid {
                    absorbed_left += lost;
                } else {
                    absorbed_right += lost;
                }
                *z *= m;
            }
        }
        if !after.is_finite() {
            return Err(Error::numerical("oracles", "split-step evolution diverged"));
        }
    }
    if absorbed_right > 1e-8 {
        return Err(Error::numerical(
            "oracles",
            format!("transmitted packet reached the right boundary (lost {absorbed_right:.3e} of the norm); enlarge the grid"),
        ));
    }
    // keep the transmitted side and move it freely to the requested time
    for (z, xi) in psi.iter_mut().zip(&x) {
        if *xi < 0.0 {
            *z = Complex::default();
        }
    }
    forward.process(&mut psi);
    for (z, kj) in psi.iter_mut().zip(&k) {
        *z *= Complex::from_polar(1.0, -(t - grid.t_clear) * kj * kj / (2.0 * pot.mu)) / n as f64;
    }
    inverse.process(&mut psi);
    let field = WaveField { x_grid: x, values: psi, log_scale: 0.0, time: t }.normalised();
    Ok(SplitStepRun { field, absorbed_right, absorbed_left, norm_drift: drift, steps })
}

/// Split-step run at the suggested step compared with the quadrature route on
/// the nodes where the oracle field exceeds `1e-8` of its peak.
pub fn check_transmitted_packet(pot: &EckartPotential, packet: &GaussianPacket, t: f64) -> Result<OracleReport> {
    let grid = SplitGrid::for_scenario(pot, packet, t)?;
    let dt = grid.suggested_dt(pot, packet);
    let run = split_step_oracle(pot, packet, &grid, t, dt)?;
    let peak = run.field.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let (xs, oracle): (Vec<f64>, Vec<Complex>) = run
        .field
        .x_grid
        .iter()
        .zip(run.field.physical())
        .zip(&run.field.values)
        .filter(|(_, v)| v.norm() > 1e-8 * peak)
        .map(|((x, p), _)| (*x, p))
        .unzip();
    let primary = transmitted_quadrature(pot, packet, &xs, t)?.physical();
    let resolution = format!("points={};dx={};dt={};steps={}", grid.points, grid.spacing(), dt, run.steps);
    Ok(OracleReport::field("psi_T(t)", &primary, &oracle, resolution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::relative_l2;
    use crate::transmission::transmission_complex;
    use crate::wavepacket::transmitted_quadrature;

    fn dimless(u: f64) -> EckartPotential {
        EckartPotential::dimensionless(u)
    }

    #[test]
    fn free_particle_is_fully_transmitted() {
        let t = transmission_ode_oracle(&dimless(0.0), 1.3, 20.0, 0.05).unwrap();
        assert!((t - 1.0).norm() < 1e-10);
    }

    #[test]
    fn ode_matches_closed_form() {
        for (u, p) in [(1.0, 1.5), (-2.2, 0.3), (0.1, 0.05), (50.0, 12.0), (-15.0, 0.8), (3.0, 1.0)] {
            let pot = dimless(u);
            let exact = transmission_complex(&pot, p).unwrap();
            let r = check_transmission(&pot, p, exact).unwrap();
            assert!(r.passes(1e-8), "U = {u}, p = {p}: {}", r.rel_diff);
        }
    }

    #[test]
    fn reflectionless_well() {
        let pot = dimless(-15.0);
        for p in [0.1, 0.7, 2.0] {
            let t = transmission_ode_oracle(&pot, p, default_half_width(&pot, p), 0.05).unwrap();
            assert!((t.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ode_self_convergence() {
        let pot = dimless(1.0);
        let exact = transmission_complex(&pot, 1.5).unwrap();
        let l = default_half_width(&pot, 1.5);
        let coarse = transmission_ode_oracle(&pot, 1.5, l, 0.1).unwrap();
        let fine = transmission_ode_oracle(&pot, 1.5, l, 0.05).unwrap();
        assert!((coarse - fine).norm() / exact.norm() < 0.5e-6);
    }

    #[test]
    fn ode_domain_errors() {
        assert!(transmission_ode_oracle(&dimless(1.0), 0.0, 20.0, 0.05).is_err());
        assert!(transmission_ode_oracle(&dimless(1.0), 1.0, 20.0, 0.0).is_err());
    }

    #[test]
    fn report_recomputes_discrepancy() {
        let r = OracleReport::scalar("x", Complex::new(1.0, 1.0), Complex::new(1.0, 0.0), "h=1".into());
        assert_eq!(r.abs_diff, (r.primary - r.oracle).norm());
        assert_eq!(r.rel_diff, r.abs_diff / r.oracle.norm());
        let t = report_table(&[r]);
        assert_eq!(t.rows[0].len(), t.header.len());
        assert_eq!(t.rows[0][0], "x");
    }

    #[test]
    fn split_step_free_motion() {
        let pot = dimless(0.0);
        let pk = GaussianPacket::new(1.5, 0.1, -60.0).unwrap();
        let grid = SplitGrid::for_scenario(&pot, &pk, 10.0).unwrap();
        let run = split_step_oracle(&pot, &pk, &grid, 10.0, 0.05).unwrap();
        let free = free_packet(&pk, &grid.nodes(), 10.0).physical();
        assert!(relative_l2(&run.field.physical(), &free) < 1e-6);
        assert!(run.norm_drift < 1e-8);
    }

    #[test]
    fn split_step_low_barrier() {
        let pot = dimless(1.0);
        let pk = GaussianPacket::new(1.5, 0.1, -60.0).unwrap();
        let t = 20.0;
        let grid = SplitGrid::for_scenario(&pot, &pk, t).unwrap();
        let dt = grid.suggested_dt(&pot, &pk);
        let run = split_step_oracle(&pot, &pk, &grid, t, dt).unwrap();
        assert!(run.norm_drift < 1e-8, "{}", run.norm_drift);
        let q = transmitted_quadrature(&pot, &pk, &grid.nodes(), t).unwrap();
        let r = OracleReport::field("psi_T", &q.physical(), &run.field.physical(), format!("dt={dt}"));
        assert!(r.passes(1e-4), "{}", r.rel_diff);
        let half = split_step_oracle(&pot, &pk, &grid, t, dt / 2.0).unwrap();
        assert!(relative_l2(&run.field.physical(), &half.field.physical()) < 0.5e-3);
    }

    #[test]
    fn split_step_needs_separable_packet() {
        let pk = GaussianPacket::new(1.5, 0.3, -20.0).unwrap();
        assert!(SplitGrid::for_scenario(&dimless(1.0), &pk, 10.0).is_err());
    }

    #[test]
    fn split_step_rejects_small_grid() {
        let pot = dimless(1.0);
        let pk = GaussianPacket::new(1.5, 0.1, -60.0).unwrap();
        let mut grid = SplitGrid::for_scenario(&pot, &pk, 20.0).unwrap();
        grid.x_max = grid.x_min + 0.6 * (grid.x_max - grid.x_min);
        assert!(matches!(split_step_oracle(&pot, &pk, &grid, 20.0, 0.05), Err(Error::Numerical { .. })));
    }
}
