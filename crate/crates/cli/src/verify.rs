//! `eckart verify`: cross-checks of a scenario against independent routes.

use eckart_core::delay::{eta_pole, eta_spectral, sum_rule_quadrature, uniform_grid, SpectralOptions};
use eckart_core::oracles::{report_table, OracleReport};
use eckart_core::poles::{PoleOptions, PoleSet};
use eckart_core::transmission::{transmission_complex, transmission_exact, transmission_symmetry_check};
use eckart_core::wavepacket::{transmitted_from_poles, transmitted_quadrature};
use eckart_core::Complex;
use rayon::prelude::*;

use crate::config::Scenario;
use crate::scenario::{oracle_reports, packet_grid, tolerance_for};
use crate::{Artifact, CliError};

/// Verification table plus the quantities that missed tolerance.
#[derive(Debug)]
pub struct Verification {
    pub reports: Vec<OracleReport>,
    pub tolerances: Vec<f64>,
    pub skipped: Vec<String>,
}

impl Verification {
    pub fn failed(&self) -> Vec<&OracleReport> {
        self.reports.iter().zip(&self.tolerances).filter(|(r, tol)| !r.passes(**tol)).map(|(r, _)| r).collect()
    }

    pub fn artifact(&self, name: &str) -> Artifact {
        let mut table = report_table(&self.reports);
        table.header.push("tolerance".into());
        for (row, tol) in table.rows.iter_mut().zip(&self.tolerances) {
            row.push(eckart_core::csv_out::fmt_float(*tol));
        }
        Artifact::new(format!("{name}_verification.csv"), table)
    }
}

/// Slowest decay rate of `eta~` on either side, in units of `alpha`.
fn slowest_decay(sc: &Scenario) -> f64 {
    let s = sc.potential.s();
    if s.im != 0.0 || sc.potential.u0 >= 0.0 {
        return 0.5;
    }
    let frac = s.re - s.re.floor();
    if frac == 0.0 {
        1.0
    } else {
        frac.min(1.0 - frac)
    }
}

pub fn verify(sc: &Scenario) -> Result<Verification, CliError> {
    let (pot, pk) = (&sc.potential, &sc.packet);
    let mut reports = Vec::new();
    let mut tolerances = Vec::new();
    let mut skipped = Vec::new();

    for r in oracle_reports(pot, pk, sc.t)? {
        tolerances.push(tolerance_for(&r, sc));
        reports.push(r);
    }

    // T(-p*) = T(p)* on the sweep
    let momenta = uniform_grid(sc.p_range.0, sc.p_range.1, 11);
    let worst = momenta.par_iter().map(|&p| transmission_symmetry_check(pot, p)).reduce(|| 0.0, f64::max);
    reports.push(OracleReport::scalar("symmetry", Complex::new(worst, 0.0), Complex::new(0.0, 0.0), "points=11".into()));
    tolerances.push(1e-12);

    let grid = uniform_grid(sc.eta_range.0, sc.eta_range.1, sc.eta_points);
    let spectral = eta_spectral(pot, pk.p0, &grid, &SpectralOptions::default())?;
    let poles = eta_pole(pot, pk.p0, &grid, sc.n_poles)?;
    reports.push(OracleReport::field(
        "eta_pole_vs_spectral",
        &poles.eta_smooth,
        &spectral.eta_smooth,
        format!("n_max={};points={}", sc.n_poles, sc.eta_points),
    ));
    tolerances.push(sc.field_rel);

    let t_exact = transmission_exact(pot, Complex::new(pk.p0, 0.0))?;
    if t_exact.log10_mag() > -6.0 {
        let reach = 35.0 / slowest_decay(sc) / pot.alpha;
        let total = sum_rule_quadrature(pot, pk.p0, reach)?;
        let exact = transmission_complex(pot, pk.p0)?;
        reports.push(OracleReport::scalar("sum_rule", total, exact, format!("reach={reach}")));
        tolerances.push(sc.field_rel);
    } else {
        skipped.push(format!("sum_rule: |T(p0)| = 10^{:.1} is below the cancellation floor", t_exact.log10_mag()));
    }

    let set = PoleSet::build(pot, sc.n_poles, &PoleOptions::default())?;
    if set.is_exact() {
        let grid = packet_grid(pot, pk, sc.t, sc.x_widths, sc.x_points);
        let from_poles = transmitted_from_poles(&set, pk, &grid, sc.t)?;
        let direct = transmitted_quadrature(pot, pk, &grid, sc.t)?;
        // compare in a common scale so deep tunnelling does not underflow
        let shift = (from_poles.log_scale - direct.log_scale).exp();
        let scaled: Vec<Complex> = from_poles.values.iter().map(|v| v * shift).collect();
        reports.push(OracleReport::field("packet_pole_form", &scaled, &direct.values, format!("points={}", sc.x_points)));
        tolerances.push(sc.field_rel);
    } else {
        skipped.push("packet_pole_form: s is not an integer, the pole form is truncated".into());
    }
    Ok(Verification { reports, tolerances, skipped })
}
