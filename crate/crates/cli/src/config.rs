//! TOML run configuration.
//!
//! Frequencies are in MHz (the angular value is 2π× that), temperatures in
//! °C, powers in mW, and times carry their unit in the key name.

use std::path::{Path, PathBuf};

use fwm_core::atomic::{ThreeLevelParams, VaporParams, DEFAULT_GRID_POINTS, DEFAULT_GRID_SIGMAS};
use fwm_core::constants::{mhz_to_rad_per_s, RB87_MASS, SPEED_OF_LIGHT, ZERO_CELSIUS};
use fwm_core::photon::{AnalysisSettings, PairStreamParams};
use fwm_core::tomography::MlOptions;
use serde::Deserialize;

use crate::error::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Scan,
    Tags,
    Analyze,
    Tomo,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Scan => "scan",
            Scenario::Tags => "tags",
            Scenario::Analyze => "analyze",
            Scenario::Tomo => "tomo",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<Scenario>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub atomic: AtomicConfig,
    #[serde(default)]
    pub vapor: VaporConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
    #[serde(default)]
    pub tomo: TomoConfig,
    pub sweep: Option<SweepConfig>,
    /// Directory of the config file; relative input paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomicConfig {
    pub omega_p_mhz: f64,
    pub omega_c_mhz: f64,
    pub delta_1_mhz: f64,
    pub delta_2_mhz: Option<f64>,
    /// Alternative to `delta_2_mhz`: the two-photon resonant velocity.
    pub resonant_velocity_mps: Option<f64>,
    pub gamma_e_mhz: f64,
    pub gamma_t_mhz: f64,
    pub branch_te: f64,
    pub lambda_p_nm: f64,
    pub lambda_c_nm: f64,
}

impl Default for AtomicConfig {
    fn default() -> Self {
        Self {
            omega_p_mhz: 350.0,
            omega_c_mhz: 350.0,
            delta_1_mhz: 1150.0,
            delta_2_mhz: None,
            resonant_velocity_mps: None,
            gamma_e_mhz: 6.07,
            gamma_t_mhz: 3.45,
            branch_te: 0.49,
            lambda_p_nm: 780.0,
            lambda_c_nm: 1367.0,
        }
    }
}

impl AtomicConfig {
    pub fn to_params(&self) -> Result<ThreeLevelParams, Failure> {
        let mut p = ThreeLevelParams {
            omega_p: mhz_to_rad_per_s(self.omega_p_mhz),
            omega_c: mhz_to_rad_per_s(self.omega_c_mhz),
            delta_1: mhz_to_rad_per_s(self.delta_1_mhz),
            delta_2: 0.0,
            lambda_p: self.lambda_p_nm * 1e-9,
            lambda_c: self.lambda_c_nm * 1e-9,
            gamma_e: mhz_to_rad_per_s(self.gamma_e_mhz),
            gamma_t: mhz_to_rad_per_s(self.gamma_t_mhz),
            branch_te: self.branch_te,
        };
        p.delta_2 = match (self.delta_2_mhz, self.resonant_velocity_mps) {
            (Some(_), Some(_)) => {
                return Err(Failure::validation(
                    "[atomic] set only one of delta_2_mhz and resonant_velocity_mps",
                ))
            }
            (Some(d), None) => mhz_to_rad_per_s(d),
            (None, Some(v)) => {
                if !v.is_finite() {
                    return Err(Failure::validation("[atomic] resonant_velocity_mps must be finite"));
                }
                -v * p.omega_top() / SPEED_OF_LIGHT
            }
            (None, None) => mhz_to_rad_per_s(-500.0),
        };
        p.validate()
            .map_err(|e| Failure::validation(format!("[atomic] {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VaporConfig {
    pub temperature_c: f64,
    pub atomic_mass_kg: f64,
}

impl Default for VaporConfig {
    fn default() -> Self {
        Self {
            temperature_c: 80.0,
            atomic_mass_kg: RB87_MASS,
        }
    }
}

impl VaporConfig {
    pub fn to_params(&self) -> Result<VaporParams, Failure> {
        let v = VaporParams {
            temperature: self.temperature_c + ZERO_CELSIUS,
            atomic_mass: self.atomic_mass_kg,
        };
        v.validate()
            .map_err(|e| Failure::validation(format!("[vapor] {e}")))?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub v_min_mps: Option<f64>,
    pub v_max_mps: Option<f64>,
    pub points: usize,
    /// Scale the weighted profile to unit peak.
    pub normalize: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            v_min_mps: None,
            v_max_mps: None,
            points: DEFAULT_GRID_POINTS,
            normalize: true,
        }
    }
}

impl GridConfig {
    pub fn velocities(&self, vapor: &VaporParams) -> Result<Vec<f64>, Failure> {
        let half = DEFAULT_GRID_SIGMAS * vapor.velocity_sigma();
        let lo = self.v_min_mps.unwrap_or(-half);
        let hi = self.v_max_mps.unwrap_or(half);
        if self.points == 0 {
            return Err(Failure::validation("[grid] points must be at least 1"));
        }
        if !(lo.is_finite() && hi.is_finite()) || (self.points > 1 && !(hi > lo)) {
            return Err(Failure::validation("[grid] v_max_mps must exceed v_min_mps"));
        }
        Ok(fwm_core::atomic::linspace(lo, hi, self.points))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TagFormat {
    #[default]
    Binary,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub pair_rate: f64,
    pub corr_sigma_ps: f64,
    pub eff_signal: f64,
    pub eff_idler: f64,
    pub jitter_signal_ps: f64,
    pub jitter_idler_ps: f64,
    pub dead_signal_ns: f64,
    pub dead_idler_ns: f64,
    pub bg_signal: f64,
    pub bg_idler: f64,
    pub duration_s: f64,
    pub format: TagFormat,
}

impl Default for SourceConfig {
    fn default() -> Self {
        let p = PairStreamParams::default();
        Self {
            pair_rate: p.pair_rate,
            corr_sigma_ps: p.corr_sigma * 1e12,
            eff_signal: p.eff_signal,
            eff_idler: p.eff_idler,
            jitter_signal_ps: p.jitter_signal * 1e12,
            jitter_idler_ps: p.jitter_idler * 1e12,
            dead_signal_ns: p.dead_signal * 1e9,
            dead_idler_ns: p.dead_idler * 1e9,
            bg_signal: p.bg_signal,
            bg_idler: p.bg_idler,
            duration_s: p.duration,
            format: TagFormat::Binary,
        }
    }
}

impl SourceConfig {
    pub fn to_params(&self, seed: u64) -> Result<PairStreamParams, Failure> {
        let p = PairStreamParams {
            pair_rate: self.pair_rate,
            corr_sigma: self.corr_sigma_ps * 1e-12,
            eff_signal: self.eff_signal,
            eff_idler: self.eff_idler,
            jitter_signal: self.jitter_signal_ps * 1e-12,
            jitter_idler: self.jitter_idler_ps * 1e-12,
            dead_signal: self.dead_signal_ns * 1e-9,
            dead_idler: self.dead_idler_ns * 1e-9,
            bg_signal: self.bg_signal,
            bg_idler: self.bg_idler,
            duration: self.duration_s,
            seed,
        };
        p.validate()
            .map_err(|e| Failure::validation(format!("[source] {e}")))?;
        Ok(p)
    }

    /// Analysis settings matching this detector description.
    pub fn analysis_settings(&self, a: &AnalyzeConfig) -> Result<AnalysisSettings, Failure> {
        let s = AnalysisSettings {
            bin_width_ps: a.bin_width_ps,
            span_ps: a.span_ps,
            window_ps: a.window_ps,
            duration: a.duration_s.unwrap_or(self.duration_s),
            dead_signal: a.dead_signal_ns.unwrap_or(self.dead_signal_ns) * 1e-9,
            dead_idler: a.dead_idler_ns.unwrap_or(self.dead_idler_ns) * 1e-9,
            jitter_signal: a.jitter_signal_ps.unwrap_or(self.jitter_signal_ps) * 1e-12,
            jitter_idler: a.jitter_idler_ps.unwrap_or(self.jitter_idler_ps) * 1e-12,
            eff_idler: Some(a.eff_idler.unwrap_or(self.eff_idler)),
        };
        validate_analysis(&s)?;
        Ok(s)
    }
}

fn validate_analysis(s: &AnalysisSettings) -> Result<(), Failure> {
    let bad = |key: &str, why: &str| Err(Failure::validation(format!("[analyze] {key} {why}")));
    if s.bin_width_ps == 0 {
        return bad("bin_width_ps", "must be at least 1");
    }
    if s.span_ps == 0 || !s.span_ps.is_multiple_of(s.bin_width_ps) {
        return bad("span_ps", "must be a positive multiple of bin_width_ps");
    }
    if !(s.window_ps.is_finite() && s.window_ps >= 0.0) {
        return bad("window_ps", "must be non-negative");
    }
    if !(s.duration.is_finite() && s.duration > 0.0) {
        return bad("duration_s", "must be positive");
    }
    for (k, v) in [
        ("dead_signal_ns", s.dead_signal),
        ("dead_idler_ns", s.dead_idler),
        ("jitter_signal_ps", s.jitter_signal),
        ("jitter_idler_ps", s.jitter_idler),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return bad(k, "must be non-negative");
        }
    }
    if let Some(e) = s.eff_idler {
        if !(e > 0.0 && e <= 1.0) {
            return bad("eff_idler", "must be in (0, 1]");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    /// Tag file; defaults to `tags.bin` in the output directory.
    pub tags: Option<PathBuf>,
    pub bin_width_ps: u64,
    pub span_ps: u64,
    /// Half-width of the coincidence window around the g_si peak.
    pub window_ps: f64,
    pub duration_s: Option<f64>,
    pub dead_signal_ns: Option<f64>,
    pub dead_idler_ns: Option<f64>,
    pub jitter_signal_ps: Option<f64>,
    pub jitter_idler_ps: Option<f64>,
    pub eff_idler: Option<f64>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        let s = AnalysisSettings::default();
        Self {
            tags: None,
            bin_width_ps: s.bin_width_ps,
            span_ps: s.span_ps,
            window_ps: s.window_ps,
            duration_s: None,
            dead_signal_ns: None,
            dead_idler_ns: None,
            jitter_signal_ps: None,
            jitter_idler_ps: None,
            eff_idler: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    PhiPlus,
    Werner,
    Mixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub state: StateKind,
    /// Werner weight of |Φ+⟩.
    #[serde(default)]
    pub p: Option<f64>,
    pub n_per_setting: u64,
    /// Idler retarder phase applied to the state before measurement, rad.
    #[serde(default)]
    pub retarder_rad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoConfig {
    pub counts: Option<PathBuf>,
    pub simulate: Option<SimulateConfig>,
    pub restarts: usize,
    pub pool_tolerance: f64,
}

impl Default for TomoConfig {
    fn default() -> Self {
        let o = MlOptions::default();
        Self {
            counts: None,
            simulate: None,
            restarts: o.restarts,
            pool_tolerance: o.pool_tolerance,
        }
    }
}

impl TomoConfig {
    pub fn options(&self, seed: u64) -> Result<MlOptions, Failure> {
        if self.restarts == 0 {
            return Err(Failure::validation("[tomo] restarts must be at least 1"));
        }
        if !(self.pool_tolerance.is_finite() && self.pool_tolerance >= 0.0) {
            return Err(Failure::validation("[tomo] pool_tolerance must be non-negative"));
        }
        Ok(MlOptions {
            restarts: self.restarts,
            seed,
            pool_tolerance: self.pool_tolerance,
            ..MlOptions::default()
        })
    }
}

/// One sweep dimension; values are visited in the order given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "axis")]
    pub axes: Vec<Axis>,
    /// Pair generation rate per pump·coupling power product, /s/mW².
    /// Required when a power axis is swept.
    pub scaling_k: Option<f64>,
    #[serde(default = "one")]
    pub pump_mw: f64,
    #[serde(default = "one")]
    pub coupling_mw: f64,
}

fn one() -> f64 {
    1.0
}

pub const SWEEP_AXES: &[&str] = &[
    "pair_rate",
    "pump_mw",
    "coupling_mw",
    "corr_sigma_ps",
    "eff_signal",
    "eff_idler",
    "jitter_signal_ps",
    "jitter_idler_ps",
    "dead_signal_ns",
    "dead_idler_ns",
    "bg_signal",
    "bg_idler",
    "duration_s",
];

impl SweepConfig {
    pub fn uses_power(&self) -> bool {
        self.axes.iter().any(|a| a.name == "pump_mw" || a.name == "coupling_mw")
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.axes.is_empty() {
            return Err(Failure::validation("[sweep] at least one axis is required"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if !SWEEP_AXES.contains(&a.name.as_str()) {
                return Err(Failure::validation(format!(
                    "[sweep] unknown axis `{}`; expected one of {}",
                    a.name,
                    SWEEP_AXES.join(", ")
                )));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Failure::validation(format!("[sweep] axis `{}` repeated", a.name)));
            }
            if a.values.is_empty() {
                return Err(Failure::validation(format!("[sweep] axis `{}` has no values", a.name)));
            }
            if a.values.iter().any(|v| !v.is_finite()) {
                return Err(Failure::validation(format!("[sweep] axis `{}` has a non-finite value", a.name)));
            }
        }
        if self.uses_power() {
            if self.axes.iter().any(|a| a.name == "pair_rate") {
                return Err(Failure::validation(
                    "[sweep] pair_rate cannot be swept together with pump_mw/coupling_mw",
                ));
            }
            match self.scaling_k {
                Some(k) if k.is_finite() && k >= 0.0 => {}
                _ => {
                    return Err(Failure::validation(
                        "[sweep] scaling_k (pairs/s/mW²) is required for power axes",
                    ))
                }
            }
            if !(self.pump_mw > 0.0 && self.coupling_mw > 0.0) {
                return Err(Failure::validation("[sweep] pump_mw and coupling_mw must be positive"));
            }
        }
        Ok(())
    }

    /// All grid points in lexicographic order of axis indices.
    /// Grid points in lexicographic order of their coordinates.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            let mut values = axis.values.clone();
            values.sort_by(f64::total_cmp);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    let values = values.clone();
                    values.into_iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Apply one sweep coordinate to a source description.
pub fn set_axis(src: &mut SourceConfig, sweep: &mut (f64, f64), name: &str, v: f64) {
    match name {
        "pair_rate" => src.pair_rate = v,
        "pump_mw" => sweep.0 = v,
        "coupling_mw" => sweep.1 = v,
        "corr_sigma_ps" => src.corr_sigma_ps = v,
        "eff_signal" => src.eff_signal = v,
        "eff_idler" => src.eff_idler = v,
        "jitter_signal_ps" => src.jitter_signal_ps = v,
        "jitter_idler_ps" => src.jitter_idler_ps = v,
        "dead_signal_ns" => src.dead_signal_ns = v,
        "dead_idler_ns" => src.dead_idler_ns = v,
        "bg_signal" => src.bg_signal = v,
        "bg_idler" => src.bg_idler = v,
        "duration_s" => src.duration_s = v,
        _ => unreachable!("axis names are validated"),
    }
}
