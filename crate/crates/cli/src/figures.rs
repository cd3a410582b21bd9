//! `eckart figure <name>`: built-in presets with the parameters quoted in the
//! figure captions, and the captioned scalars checked against the computation.

use eckart_core::csv_out::CsvTable;
use eckart_core::delay::{delay_moments, effective_range, eta_spectral, near_threshold_model, relative_l2, uniform_grid, SpectralOptions};
use eckart_core::poles::{pole_sum_transmission, pole_table, PoleClass, PoleOptions, PoleSet};
use eckart_core::potential::EckartPotential;
use eckart_core::transmission::transmission_complex;
use eckart_core::wavepacket::{
    com_delay, com_position, density_difference, free_packet, phase_time_and_broad_com, transmitted_from_poles,
    transmitted_quadrature, GaussianPacket, WaveField,
};
use rayon::prelude::*;

use crate::config::Profile;
use crate::scenario::packet_grid;
use crate::{check_table, scalar_table, Artifact, Check, CliError, Scalar};

pub const FIGURE_NAMES: [&str; 15] = [
    "fig2a", "fig2b", "fig2c", "fig2d", "fig2e", "fig2f", "fig3a", "fig3b", "fig4a", "fig4b", "fig5", "fig5a", "fig6", "fig7",
    "fig8",
];

/// Packet scenario quoted in a caption, in dimensionless units.
#[derive(Clone, Copy, Debug)]
struct Preset {
    u0_bar: f64,
    p0: f64,
    dp: f64,
    x0: f64,
    t: f64,
}

impl Preset {
    fn potential(&self) -> EckartPotential {
        EckartPotential::dimensionless(self.u0_bar)
    }

    fn packet(&self) -> Result<GaussianPacket, CliError> {
        Ok(GaussianPacket::new(self.p0, self.dp, self.x0)?)
    }
}

const WELL_2A: Preset = Preset { u0_bar: -2e4, p0: 200.0, dp: 6.67, x0: -4.0, t: 0.04 };
const BARRIER_2B: Preset = Preset { u0_bar: 1e5, p0: 700.0, dp: 6.67, x0: -4.0, t: 0.012 };
const TUNNEL_2C: Preset = Preset { u0_bar: 1e4, p0: 50.0, dp: 3.64, x0: -4.0, t: 0.17 };
const SHALLOW_WELL: Preset = Preset { u0_bar: -15.0, p0: 0.5, dp: 0.1, x0: -100.0, t: 650.0 };
const LOW_BARRIER: Preset = Preset { u0_bar: 1.0, p0: 1.5, dp: 0.1, x0: -100.0, t: 500.0 };
/// Slow broad packet of the COM sweeps; `u0_bar` is swept.
const SLOW: Preset = Preset { u0_bar: 0.0, p0: 0.005, dp: 0.001, x0: -3e3, t: 2e6 };

/// CSV artifacts of one figure plus its captioned checks.
#[derive(Debug)]
pub struct FigureOutput {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl FigureOutput {
    fn new(name: &str, artifacts: Vec<(&str, CsvTable)>, checks: Vec<Check>, scalars: Vec<Scalar>) -> Self {
        let mut out: Vec<Artifact> =
            artifacts.into_iter().map(|(stem, t)| Artifact::new(format!("{name}_{stem}.csv"), t)).collect();
        if !scalars.is_empty() {
            out.push(Artifact::new(format!("{name}_summary.csv"), scalar_table(&scalars, "x=1/alpha;k=alpha")));
        }
        out.push(Artifact::new(format!("{name}_checks.csv"), check_table(&checks)));
        FigureOutput { artifacts: out, checks }
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passes()).collect()
    }
}

fn unknown(name: &str) -> CliError {
    CliError::Config(format!("unknown figure `{name}`; valid names: {}", FIGURE_NAMES.join(", ")))
}

/// `U0` of the well or low barrier with real shape parameter `s > -1/2`.
fn strength_for(s: f64) -> f64 {
    -s * (s + 1.0) / 2.0
}

/// Physical densities of several fields sharing one grid, as columns.
fn density_columns(header: &[&str], fields: &[&WaveField]) -> CsvTable {
    let mut t = CsvTable::new(header, 0.0, "x=1/alpha;rho=alpha").with_meta("t", fields[0].time);
    let scaled: Vec<Vec<f64>> =
        fields.iter().map(|f| f.density().iter().map(|r| r * (2.0 * f.log_scale).exp()).collect()).collect();
    for (i, x) in fields[0].x_grid.iter().enumerate() {
        let mut row = vec![*x];
        row.extend(scaled.iter().map(|c| c[i]));
        t.push_floats(&row);
    }
    t
}

fn points(profile: Profile, fast: usize) -> usize {
    match profile {
        Profile::Fast => fast,
        Profile::Strict => 2 * fast - 1,
    }
}

/// Fig. 2a/2b: a packet crossing a deep well or passing over a high barrier.
fn classical_packet(name: &str, preset: Preset, expected: f64, profile: Profile) -> Result<FigureOutput, CliError> {
    let (pot, pk) = (preset.potential(), preset.packet()?);
    let shift = pot.classical_shift(pk.p0)?;
    let grid = packet_grid(&pot, &pk, preset.t, 8.0, points(profile, 2001));
    let tr = transmitted_quadrature(&pot, &pk, &grid, preset.t)?;
    let free = free_packet(&pk, &grid, preset.t);
    let com = com_position(&tr)? - com_position(&free)?;
    let table = density_difference(&tr, &free)?.with_meta("x_tilde", shift.re);
    Ok(FigureOutput::new(
        name,
        vec![("packet", table)],
        vec![Check::new("alpha_x_tilde", shift.re, expected, 5e-4)],
        vec![Scalar::complex("x_tilde", shift), Scalar::real("delta_x_com", com)],
    ))
}

/// Fig. 2c: tunnelling under a high barrier, with the free packets at `p0` and `p0 + dp0`.
fn tunnelling_packet(profile: Profile) -> Result<FigureOutput, CliError> {
    let preset = TUNNEL_2C;
    let (pot, pk) = (preset.potential(), preset.packet()?);
    let shift = pot.classical_shift(pk.p0)?;
    // momentum filtering under the barrier raises the mean momentum
    let boost = 0.5 * pk.dp * pk.dp * shift.im;
    let boosted = GaussianPacket::with_mass(pk.p0 + boost, pk.dp, pk.x0, pk.mu)?;
    let grid = packet_grid(&pot, &pk, preset.t, 8.0, points(profile, 2001));
    let tr = transmitted_quadrature(&pot, &pk, &grid, preset.t)?;
    let free = free_packet(&pk, &grid, preset.t);
    let free_boosted = free_packet(&boosted, &grid, preset.t);
    let peak = tr.log10_peak();
    let mut table = CsvTable::new(&["x", "log10_rho_t", "rho_free", "rho_free_boosted"], 0.0, "x=1/alpha;rho=alpha")
        .with_meta("t", preset.t)
        .with_meta("dp0", boost);
    let (a, b) = (free.density(), free_boosted.density());
    let (sa, sb) = ((2.0 * free.log_scale).exp(), (2.0 * free_boosted.log_scale).exp());
    for (i, (x, r)) in grid.iter().zip(tr.density()).enumerate() {
        let log_rho = (r.ln() + 2.0 * tr.log_scale) / std::f64::consts::LN_10;
        table.push_floats(&[*x, log_rho, a[i] * sa, b[i] * sb]);
    }
    Ok(FigureOutput::new(
        "fig2c",
        vec![("packet", table)],
        vec![
            Check::new("re_alpha_x_tilde", shift.re, 0.8515, 1e-3),
            Check::new("log10_peak_psi_plus_221", peak + 221.0, 0.0, 2.0),
        ],
        vec![Scalar::complex("x_tilde", shift), Scalar::real("log10_peak_psi", peak), Scalar::real("dp0", boost)],
    ))
}

/// Fig. 2d-f: `eta~` and its running average for the three packet scenarios.
fn delay_distribution(name: &str, preset: Preset, profile: Profile) -> Result<FigureOutput, CliError> {
    let pot = preset.potential();
    let shift = pot.classical_shift(preset.p0)?;
    let grid = uniform_grid(-4.0, 4.0, points(profile, 1601));
    let dist = eta_spectral(&pot, preset.p0, &grid, &SpectralOptions::default())?;
    let table = dist.table(0.25)?.with_meta("x_tilde", shift.re);
    Ok(FigureOutput::new(name, vec![("eta", table)], Vec::new(), vec![Scalar::complex("x_tilde", shift)]))
}

fn poles_figure(name: &str, u0_bar: f64, n_max: usize, checks: impl FnOnce(&PoleSet) -> Vec<Check>) -> Result<FigureOutput, CliError> {
    let pot = EckartPotential::dimensionless(u0_bar);
    let set = PoleSet::build(&pot, n_max, &PoleOptions::default())?;
    let top = set.poles.iter().map(|p| p.ln_residue.log10_mag()).fold(f64::NEG_INFINITY, f64::max);
    let bound = set.poles.iter().filter(|p| p.class == PoleClass::Bound).count();
    let table = pole_table(&set.poles).with_meta("u0_bar", u0_bar);
    let checks = checks(&set);
    Ok(FigureOutput::new(
        name,
        vec![("poles", table)],
        checks,
        vec![Scalar::complex("s", pot.s()), Scalar::real("bound_poles", bound as f64), Scalar::real("log10_max_residue", top)],
    ))
}

/// Fig. 5: density difference, `eta~` and the bound-state residues for the `s = 5` well.
fn shallow_well(profile: Profile) -> Result<FigureOutput, CliError> {
    let preset = SHALLOW_WELL;
    let (pot, pk) = (preset.potential(), preset.packet()?);
    let grid = pk.grid(preset.t, 0.0, 10.0, points(profile, 4001));
    let tr = transmitted_quadrature(&pot, &pk, &grid, preset.t)?;
    let free = free_packet(&pk, &grid, preset.t);
    let com = com_position(&tr)? - com_position(&free)?;
    let eta = eta_spectral(&pot, pk.p0, &uniform_grid(-5.0, 15.0, points(profile, 2001)), &SpectralOptions::default())?;
    let poles = PoleSet::build(&pot, 8, &PoleOptions::default())?;
    Ok(FigureOutput::new(
        "fig5",
        vec![("density", density_difference(&tr, &free)?), ("eta", eta.table(1.0)?), ("residues", pole_table(&poles.poles))],
        vec![Check::new("delta_x_com", com, 4.0768, 0.01)],
        vec![Scalar::complex("s", pot.s()), Scalar::real("delta_x_com", com)],
    ))
}

/// COM delay of the slow packet across a family of potentials.
///
/// Columns: the direct quadrature, the drift `delta v0 t` from momentum
/// filtering, and the drift-free delay from the broad-packet law and from the
/// near-threshold model at `level` (where it applies).
fn com_sweep_table(strengths: &[f64], level: u32, profile: Profile) -> Result<CsvTable, CliError> {
    let pk = SLOW.packet()?;
    let t = SLOW.t;
    let grid = pk.grid(t, 0.0, 10.0, points(profile, 4001));
    let rows = strengths
        .par_iter()
        .map(|&u| {
            let pot = EckartPotential::dimensionless(u);
            let direct = com_delay(&pot, &pk, &grid, t)?;
            let law = phase_time_and_broad_com(&pot, &pk, t)?;
            let drift = law.velocity_shift * t;
            let model = match near_threshold_model(&pot, pk.p0, level) {
                Ok(m) => m.com_delay_model,
                Err(_) => f64::NAN,
            };
            Ok([u, pot.s().re, pot.s().im, direct, drift, direct - drift, law.com_prediction - drift, model])
        })
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let mut table = CsvTable::new(
        &["u0_bar", "re_s", "im_s", "com_direct", "drift", "direct_minus_drift", "broad_law", "near_threshold"],
        0.0,
        "x=1/alpha",
    )
    .with_meta("p0", pk.p0)
    .with_meta("dp", pk.dp)
    .with_meta("x0", pk.x0)
    .with_meta("t", t);
    for r in rows {
        table.push_floats(&r);
    }
    Ok(table)
}

/// Shape parameters resolving both the broad trend and the structure at `|s - centre| ~ p0`.
fn shape_sweep(centre: f64, lo: f64, hi: f64, p0: f64, profile: Profile) -> Vec<f64> {
    let mut s: Vec<f64> = uniform_grid(lo, hi, points(profile, 21));
    s.extend(uniform_grid(-10.0, 10.0, points(profile, 41)).iter().map(|f| centre + f * p0).filter(|v| *v > lo && *v < hi));
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    s
}

/// Fig. 5a: COM delay vs well depth near the second bound state, and the effective range.
fn well_depth_sweep(profile: Profile) -> Result<FigureOutput, CliError> {
    let strengths: Vec<f64> = shape_sweep(1.0, 0.5, 1.5, SLOW.p0, profile).into_iter().map(strength_for).collect();
    let com = com_sweep_table(&strengths, 1, profile)?;

    let p0 = 0.001;
    let shapes = uniform_grid(0.9, 1.1, points(profile, 201));
    let ranges = shapes
        .par_iter()
        .map(|&s| effective_range(&EckartPotential::dimensionless(strength_for(s)), p0))
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let mut range = CsvTable::new(&["s", "range", "approximation"], 0.0, "x=1/alpha").with_meta("p0", p0);
    for (s, r) in shapes.iter().zip(&ranges) {
        range.push_floats(&[*s, *r, (2.0 / (p0 * (s - 1.0).abs())).sqrt()]);
    }
    let at_one = effective_range(&EckartPotential::dimensionless(-1.0), p0)?;
    let peak = ranges.iter().cloned().fold(0.0, f64::max);
    Ok(FigureOutput::new(
        "fig5a",
        vec![("com", com), ("range", range)],
        vec![Check::new("range_at_s_1", at_one, 2.0, 0.1)],
        vec![Scalar::real("range_at_s_1", at_one), Scalar::real("range_peak", peak)],
    ))
}

/// Fig. 6: the low barrier, with the packet built from 2, 8 and 30 poles.
fn low_barrier(profile: Profile) -> Result<FigureOutput, CliError> {
    let preset = LOW_BARRIER;
    let (pot, pk) = (preset.potential(), preset.packet()?);
    let grid = packet_grid(&pot, &pk, preset.t, 8.0, points(profile, 2001));
    let exact = transmitted_quadrature(&pot, &pk, &grid, preset.t)?;
    let free = free_packet(&pk, &grid, preset.t);
    let counts = [2usize, 8, 30];
    let sets = counts
        .iter()
        .map(|&n| PoleSet::with_pole_count(&pot, n, &PoleOptions::default()))
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let fields = sets
        .iter()
        .map(|set| transmitted_from_poles(set, &pk, &grid, preset.t))
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let packet = density_columns(
        &["x", "rho_exact", "rho_2_poles", "rho_8_poles", "rho_30_poles", "rho_free"],
        &[&exact, &fields[0], &fields[1], &fields[2], &free],
    );
    let t_exact = transmission_complex(&pot, pk.p0)?;
    let mut errors = Vec::new();
    for set in &sets {
        errors.push((pole_sum_transmission(set, pk.p0)? - t_exact).norm() / t_exact.norm());
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let residues = PoleSet::with_pole_count(&pot, 50, &PoleOptions::default())?;
    let eta = eta_spectral(&pot, pk.p0, &uniform_grid(-5.0, 5.0, points(profile, 1001)), &SpectralOptions::default())?;
    let mut scalars = vec![Scalar::complex("s", pot.s())];
    for (n, e) in counts.iter().zip(&errors) {
        scalars.push(Scalar::real(&format!("pole_sum_rel_error_{n}"), *e));
    }
    Ok(FigureOutput::new(
        "fig6",
        vec![("packet", packet), ("eta", eta.table(1.0)?), ("residues", pole_table(&residues.poles))],
        vec![
            Check::new("pole_sum_rel_error_30", errors[2], 0.0, 1e-3),
            Check::new("monotone_improvement", if monotone { 1.0 } else { 0.0 }, 1.0, 0.0),
        ],
        scalars,
    ))
}

/// Fig. 7: COM delay vs barrier height.
fn barrier_height_sweep(profile: Profile) -> Result<FigureOutput, CliError> {
    let mut strengths: Vec<f64> = uniform_grid(-4.0, 0.0, points(profile, 41)).iter().map(|e| 10f64.powf(*e)).collect();
    // the largest delay sits at s ~ -p0
    strengths.extend(shape_sweep(0.0, -0.45, -1e-4, SLOW.p0, profile).into_iter().map(strength_for));
    strengths.sort_by(f64::total_cmp);
    strengths.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let com = com_sweep_table(&strengths, 0, profile)?;
    Ok(FigureOutput::new("fig7", vec![("com", com)], Vec::new(), Vec::new()))
}

/// Fig. 8: how the packet magnitude converges with the number of poles over a
/// barrier above the coalescence point, where far poles matter.
fn magnitude_convergence(profile: Profile) -> Result<FigureOutput, CliError> {
    let preset = Preset { u0_bar: 5.0, ..LOW_BARRIER };
    let (pot, pk) = (preset.potential(), preset.packet()?);
    let grid = packet_grid(&pot, &pk, preset.t, 8.0, points(profile, 1001));
    let exact = transmitted_quadrature(&pot, &pk, &grid, preset.t)?;
    let reference = exact.physical();
    let counts: Vec<usize> = (1..=8).map(|j| 1 << j).collect();
    let rows = counts
        .par_iter()
        .map(|&n| {
            let set = PoleSet::with_pole_count(&pot, n, &PoleOptions::default())?;
            let field = transmitted_from_poles(&set, &pk, &grid, preset.t)?;
            Ok([n as f64, field.log10_peak(), exact.log10_peak(), relative_l2(&field.physical(), &reference)])
        })
        .collect::<eckart_core::Result<Vec<_>>>()?;
    let mut table = CsvTable::new(&["poles", "log10_peak_poles", "log10_peak_exact", "rel_l2"], 0.0, "psi=alpha^(1/2)")
        .with_meta("u0_bar", preset.u0_bar)
        .with_meta("t", preset.t);
    for r in &rows {
        table.push_floats(r);
    }
    let first_moment = delay_moments(&pot, pk.p0, 1)?;
    Ok(FigureOutput::new(
        "fig8",
        vec![("convergence", table)],
        Vec::new(),
        vec![Scalar::complex("s", pot.s()), Scalar::complex("first_moment", first_moment)],
    ))
}

/// Builds the named figure.
pub fn reproduce(name: &str, profile: Profile) -> Result<FigureOutput, CliError> {
    match name {
        "fig2a" => classical_packet(name, WELL_2A, 0.6619, profile),
        "fig2b" => classical_packet(name, BARRIER_2B, -0.5392, profile),
        "fig2c" => tunnelling_packet(profile),
        "fig2d" => delay_distribution(name, WELL_2A, profile),
        "fig2e" => delay_distribution(name, BARRIER_2B, profile),
        "fig2f" => delay_distribution(name, TUNNEL_2C, profile),
        "fig3a" => poles_figure(name, 5.0, 10, |_| Vec::new()),
        "fig3b" => poles_figure(name, strength_for(2.25), 10, |set| {
            let bound = set.poles.iter().filter(|p| p.class == PoleClass::Bound).count();
            vec![Check::new("bound_states", bound as f64, 3.0, 0.0)]
        }),
        "fig4a" => poles_figure(name, -861.0, 64, |set| vec![Check::new("s", set.s.re, 41.0, 0.0)]),
        "fig4b" => poles_figure(name, 2485.0, 64, |set| vec![Check::new("im_s", set.s.im, 70.5, 0.05)]),
        "fig5" => shallow_well(profile),
        "fig5a" => well_depth_sweep(profile),
        "fig6" => low_barrier(profile),
        "fig7" => barrier_height_sweep(profile),
        "fig8" => magnitude_convergence(profile),
        _ => Err(unknown(name)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = reproduce("fig9", Profile::Fast).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        let msg = err.to_string();
        assert!(FIGURE_NAMES.iter().all(|n| msg.contains(n)), "{msg}");
    }

    #[test]
    fn pole_presets_match_captions() {
        for name in ["fig3b", "fig4a", "fig4b"] {
            let out = reproduce(name, Profile::Fast).unwrap();
            assert!(out.failed().is_empty(), "{name}: {:?}", out.failed());
        }
    }

    #[test]
    fn shape_sweep_is_sorted_and_bracketed() {
        let s = shape_sweep(1.0, 0.5, 1.5, 0.005, Profile::Fast);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.first().unwrap() >= &0.5 && s.last().unwrap() <= &1.5);
        assert!(s.iter().any(|v| (v - 1.005).abs() < 1e-12));
    }
}
