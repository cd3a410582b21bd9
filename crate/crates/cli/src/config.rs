//! Scenario files: TOML with `[scenario]`, `[grid]` and `[tolerances]` sections.

use std::path::Path;

use eckart_core::potential::EckartPotential;
use eckart_core::wavepacket::GaussianPacket;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Computation {
    TransmissionSweep,
    PoleTable,
    Eta,
    PacketSnapshot,
    ComSweep,
    OracleCheck,
}

impl Computation {
    pub fn file_stem(self) -> &'static str {
        match self {
            Computation::TransmissionSweep => "transmission",
            Computation::PoleTable => "poles",
            Computation::Eta => "eta",
            Computation::PacketSnapshot => "packet",
            Computation::ComSweep => "com_sweep",
            Computation::OracleCheck => "oracle",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<String>,
    /// Dimensionless strength `mu U0 / alpha^2`.
    pub u0_bar: Option<f64>,
    pub u0: Option<f64>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub p0: f64,
    pub dp: f64,
    pub x0: f64,
    pub t: f64,
    pub computations: Vec<Computation>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_points: Option<usize>,
    /// Half-width of the packet grid in packet spreads.
    pub x_widths: Option<f64>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub p_points: Option<usize>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub eta_points: Option<usize>,
    pub eta_window: Option<f64>,
    pub n_poles: Option<usize>,
    pub com_times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    /// Relative tolerance for scalar oracle comparisons.
    pub scalar_rel: Option<f64>,
    /// Relative L2 tolerance for field comparisons.
    pub field_rel: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

/// Resolution presets selected by `--tolerance-profile`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Fast,
    Strict,
}

impl Profile {
    fn point_scale(self) -> usize {
        match self {
            Profile::Fast => 1,
            Profile::Strict => 4,
        }
    }

    /// Default `(scalar, field)` relative tolerances.
    pub fn tolerances(self) -> (f64, f64) {
        match self {
            Profile::Fast => (1e-6, 1e-3),
            Profile::Strict => (1e-8, 1e-4),
        }
    }
}

/// Validated scenario with every default filled in.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub potential: EckartPotential,
    pub packet: GaussianPacket,
    pub t: f64,
    pub computations: Vec<Computation>,
    pub x_points: usize,
    pub x_widths: f64,
    pub p_range: (f64, f64),
    pub p_points: usize,
    pub eta_range: (f64, f64),
    pub eta_points: usize,
    pub eta_window: f64,
    pub n_poles: usize,
    pub com_times: Vec<f64>,
    pub scalar_rel: f64,
    pub field_rel: f64,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field_error(field, "must be finite"))
    }
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_error(field, format!("must be positive, got {v}")))
    }
}

impl Scenario {
    pub fn load(path: &Path, profile: Profile) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, profile).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, profile: Profile) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_file(file, profile)
    }

    pub fn from_file(file: ConfigFile, profile: Profile) -> Result<Self, CliError> {
        let sc = &file.scenario;
        let potential = match (sc.u0_bar, sc.u0, sc.alpha, sc.mu) {
            (Some(u), None, None, None) => EckartPotential::dimensionless(finite("scenario.u0_bar", u)?),
            (None, Some(u), Some(a), Some(m)) => {
                EckartPotential::new(finite("scenario.u0", u)?, a, m).map_err(|e| field_error("scenario.alpha/mu", e))?
            }
            (Some(_), _, _, _) => {
                return Err(field_error("scenario.u0_bar", "give either u0_bar or (u0, alpha, mu), not both"))
            }
            _ => return Err(field_error("scenario.u0", "give u0_bar, or all of u0, alpha and mu")),
        };
        let packet = GaussianPacket::with_mass(
            positive("scenario.p0", sc.p0)?,
            positive("scenario.dp", sc.dp)?,
            finite("scenario.x0", sc.x0)?,
            potential.mu,
        )
        .map_err(|e| field_error("scenario", e))?;
        let t = finite("scenario.t", sc.t)?;
        if sc.computations.is_empty() {
            return Err(field_error("scenario.computations", "at least one computation is required"));
        }
        let g = &file.grid;
        let scale = profile.point_scale();
        let p_range = (g.p_min.unwrap_or(0.01 * packet.p0), g.p_max.unwrap_or(3.0 * packet.p0));
        if !(p_range.0 > 0.0 && p_range.1 > p_range.0 && p_range.1.is_finite()) {
            return Err(field_error("grid.p_min/p_max", format!("need 0 < p_min < p_max, got {p_range:?}")));
        }
        let inv_alpha = 1.0 / potential.alpha;
        let eta_range = (g.eta_min.unwrap_or(-10.0 * inv_alpha), g.eta_max.unwrap_or(10.0 * inv_alpha));
        if !(eta_range.1 > eta_range.0 && eta_range.0.is_finite() && eta_range.1.is_finite()) {
            return Err(field_error("grid.eta_min/eta_max", "need eta_min < eta_max"));
        }
        let count = |field: &str, v: Option<usize>, default: usize| -> Result<usize, CliError> {
            match v {
                Some(n) if n < 2 => Err(field_error(field, "needs at least 2 points")),
                Some(n) => Ok(n),
                None => Ok(default * scale + 1),
            }
        };
        let name = sc.name.clone().unwrap_or_else(|| "scenario".into());
        // the name becomes a file-name prefix
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(field_error("scenario.name", format!("use letters, digits, '_' or '-', got {name:?}")));
        }
        let (scalar_tol, field_tol) = profile.tolerances();
        let com_times = g.com_times.clone().unwrap_or_else(|| vec![0.25 * t, 0.5 * t, t]);
        if com_times.iter().any(|v| !v.is_finite()) {
            return Err(field_error("grid.com_times", "must be finite"));
        }
        Ok(Scenario {
            name,
            potential,
            packet,
            t,
            computations: sc.computations.clone(),
            x_points: count("grid.x_points", g.x_points, 1000)?,
            x_widths: positive("grid.x_widths", g.x_widths.unwrap_or(8.0))?,
            p_range,
            p_points: count("grid.p_points", g.p_points, 200)?,
            eta_range,
            eta_points: count("grid.eta_points", g.eta_points, 1000)?,
            eta_window: positive("grid.eta_window", g.eta_window.unwrap_or(inv_alpha))?,
            n_poles: g.n_poles.unwrap_or(64 * scale).max(1),
            com_times,
            scalar_rel: positive("tolerances.scalar_rel", file.tolerances.scalar_rel.unwrap_or(scalar_tol))?,
            field_rel: positive("tolerances.field_rel", file.tolerances.field_rel.unwrap_or(field_tol))?,
        })
    }
}
