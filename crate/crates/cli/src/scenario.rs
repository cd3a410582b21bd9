//! `eckart run`: the computations listed in a scenario file plus a summary.

use eckart_core::csv_out::CsvTable;
use eckart_core::delay::{effective_range, eta_spectral, uniform_grid, SpectralOptions};
use eckart_core::oracles::{check_transmission, check_transmitted_packet, report_table, OracleReport, SplitGrid};
use eckart_core::poles::{pole_table, PoleOptions, PoleSet};
use eckart_core::potential::EckartPotential;
use eckart_core::transmission::transmission_exact;
use eckart_core::wavepacket::{com_delay, phase_time_and_broad_com, transmitted_quadrature, GaussianPacket};
use eckart_core::Complex;
use rayon::prelude::*;

use crate::config::{Computation, Scenario};
use crate::{scalar_table, Artifact, CliError, Scalar};

/// Artifacts of a run plus the names of oracle checks that missed tolerance.
#[derive(Debug)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub failed_checks: Vec<String>,
}

/// Grid covering both the free packet and the transmitted one at time `t`.
///
/// The transmitted packet sits ahead by `Re x~' + dv t`, where `dv` is the
/// velocity gained from momentum filtering under the barrier.
pub fn packet_grid(pot: &EckartPotential, packet: &GaussianPacket, t: f64, widths: f64, n: usize) -> Vec<f64> {
    let lead = pot
        .classical_shift(packet.p0)
        .map(|x| x.re + 0.5 * packet.dp * packet.dp * x.im / packet.mu * t)
        .unwrap_or(0.0);
    let extra = 0.5 * lead.abs() / packet.spread(t);
    packet.grid(t, 0.5 * lead, widths + extra, n)
}

pub fn transmission_sweep(pot: &EckartPotential, p_range: (f64, f64), n: usize) -> Result<CsvTable, CliError> {
    let momenta = uniform_grid(p_range.0, p_range.1, n);
    let values = momenta
        .par_iter()
        .map(|&p| transmission_exact(pot, Complex::new(p, 0.0)))
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let mut t = CsvTable::new(&["p", "re_t", "im_t", "abs_t", "log10_abs_t", "arg_t"], 0.0, "p=alpha")
        .with_meta("u0_bar", pot.strength());
    for (p, v) in momenta.iter().zip(values) {
        let z = v.to_complex();
        t.push_floats(&[*p, z.re, z.im, z.norm(), v.log10_mag(), v.phase]);
    }
    Ok(t)
}

pub fn com_sweep(pot: &EckartPotential, packet: &GaussianPacket, times: &[f64], widths: f64, n: usize) -> Result<CsvTable, CliError> {
    let rows = times
        .par_iter()
        .map(|&t| {
            let grid = packet_grid(pot, packet, t, widths, n);
            let direct = com_delay(pot, packet, &grid, t)?;
            let law = phase_time_and_broad_com(pot, packet, t)?.com_prediction;
            Ok([t, direct, law])
        })
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let mut table = CsvTable::new(&["t", "com_delay", "broad_prediction"], 0.0, "t=mu/alpha^2;x=1/alpha");
    for r in rows {
        table.push_floats(&r);
    }
    Ok(table)
}

/// ODE checks at `p0` and `p0 +- dp`, plus the split-step packet when it can resolve the field.
pub fn oracle_reports(pot: &EckartPotential, packet: &GaussianPacket, t: f64) -> Result<Vec<OracleReport>, CliError> {
    let momenta: Vec<f64> = [packet.p0 - packet.dp, packet.p0, packet.p0 + packet.dp].into_iter().filter(|p| *p > 0.0).collect();
    let mut reports = momenta
        .par_iter()
        .map(|&p| {
            let exact = transmission_exact(pot, Complex::new(p, 0.0))?;
            // the ODE oracle works with plain f64 and cannot see deep tunnelling
            if exact.log10_mag() < -8.0 {
                return Ok(None);
            }
            check_transmission(pot, p, exact.to_complex()).map(Some)
        })
        .collect::<eckart_core::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let transmits = transmission_exact(pot, Complex::new(packet.p0, 0.0))?.log10_mag() > -6.0;
    if transmits && t > 0.0 && SplitGrid::for_scenario(pot, packet, t).is_ok() {
        reports.push(check_transmitted_packet(pot, packet, t)?);
    }
    Ok(reports)
}

/// Scalar tolerance for amplitudes at one momentum, field tolerance for sampled packets.
pub fn tolerance_for(report: &OracleReport, sc: &Scenario) -> f64 {
    if report.quantity.starts_with("T(") {
        sc.scalar_rel
    } else {
        sc.field_rel
    }
}

/// Key scalars of a scenario: `s`, `x~'`, `delta x_COM`, `tau_phase`, `delta v0`, `R`.
pub fn summary(sc: &Scenario) -> Result<Vec<Scalar>, CliError> {
    let (pot, pk) = (&sc.potential, &sc.packet);
    let shift = pot.classical_shift(pk.p0)?;
    let grid = packet_grid(pot, pk, sc.t, sc.x_widths, sc.x_points);
    let com = com_delay(pot, pk, &grid, sc.t)?;
    let phase = phase_time_and_broad_com(pot, pk, sc.t)?;
    let range = effective_range(pot, pk.p0)?;
    Ok(vec![
        Scalar::complex("s", pot.s()),
        Scalar::complex("x_tilde", shift),
        Scalar::real("delta_x_com", com),
        Scalar::real("tau_phase", phase.tau_phase),
        Scalar::real("delta_v0", phase.velocity_shift),
        Scalar::real("effective_range", range),
    ])
}

fn compute(sc: &Scenario, what: Computation) -> Result<(CsvTable, Vec<String>), CliError> {
    let (pot, pk) = (&sc.potential, &sc.packet);
    let table = match what {
        Computation::TransmissionSweep => transmission_sweep(pot, sc.p_range, sc.p_points)?,
        Computation::PoleTable => pole_table(&PoleSet::build(pot, sc.n_poles, &PoleOptions::default())?.poles),
        Computation::Eta => {
            let grid = uniform_grid(sc.eta_range.0, sc.eta_range.1, sc.eta_points);
            eta_spectral(pot, pk.p0, &grid, &SpectralOptions::default())?.table(sc.eta_window)?
        }
        Computation::PacketSnapshot => {
            let grid = packet_grid(pot, pk, sc.t, sc.x_widths, sc.x_points);
            transmitted_quadrature(pot, pk, &grid, sc.t)?.table()
        }
        Computation::ComSweep => com_sweep(pot, pk, &sc.com_times, sc.x_widths, sc.x_points)?,
        Computation::OracleCheck => {
            let reports = oracle_reports(pot, pk, sc.t)?;
            let failed = reports.iter().filter(|r| !r.passes(tolerance_for(r, sc))).map(|r| r.quantity.clone()).collect();
            let table = report_table(&reports).with_meta("scalar_rel", sc.scalar_rel).with_meta("field_rel", sc.field_rel);
            return Ok((table, failed));
        }
    };
    Ok((table, Vec::new()))
}

/// Runs every requested computation in parallel; output order follows the config.
pub fn run(sc: &Scenario) -> Result<RunOutput, CliError> {
    let (jobs, summary) = rayon::join(
        || sc.computations.par_iter().map(|&c| compute(sc, c).map(|r| (c, r))).collect::<Result<Vec<_>, _>>(),
        || summary(sc),
    );
    let mut artifacts = Vec::new();
    let mut failed_checks = Vec::new();
    for (c, (table, failed)) in jobs? {
        artifacts.push(Artifact::new(format!("{}_{}.csv", sc.name, c.file_stem()), table));
        failed_checks.extend(failed);
    }
    let summary = scalar_table(&summary?, "x=1/alpha;t=mu/alpha^2;v=alpha/mu").with_meta("scenario", &sc.name);
    artifacts.push(Artifact::new(format!("{}_summary.csv", sc.name), summary));
    Ok(RunOutput { artifacts, failed_checks })
}
