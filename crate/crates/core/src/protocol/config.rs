//! Experiment configuration files.
//!
//! A configuration is a TOML document with the sections `[units]`, `[chain]`,
//! `[experiment]`, `[errors]` and `[phonon]`. Frequencies are read in Hz
//! (multiplied by 2π) unless `units.frequency = "rad_s"`. Times on the
//! experiment grid are in units of `1/J` and accept expressions such as
//! `"2pi/3"`.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::ion_chain::{ChainConfig, ModeAxes, ATOMIC_MASS_UNIT};
use crate::protocol::InteractionRange;
use crate::spin_algebra::SpinState;
use crate::spin_models::ModelKind;
use crate::spin_phonon::{MotionModel, PhononSpace, PropagationSettings, StepRule};
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    units: RawUnits,
    chain: RawChain,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    errors: RawErrors,
    #[serde(default)]
    phonon: RawPhonon,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    #[serde(default)]
    frequency: FrequencyUnit,
}

/// How frequencies in a configuration file are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum FrequencyUnit {
    /// Cycles per second; multiplied by 2π.
    #[default]
    #[serde(rename = "hz")]
    Hz,
    #[serde(rename = "rad_s")]
    RadPerSecond,
}

impl FrequencyUnit {
    fn to_angular(self, v: f64) -> f64 {
        match self {
            FrequencyUnit::Hz => 2.0 * PI * v,
            FrequencyUnit::RadPerSecond => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    num_ions: usize,
    /// Ion mass in atomic mass units; defaults to ⁴⁰Ca⁺.
    ion_mass_u: Option<f64>,
    trap_frequencies: [f64; 3],
    #[serde(default = "default_wavelength")]
    laser_wavelength_nm: f64,
    rabi_frequency: Option<f64>,
    rabi_frequencies: Option<Vec<f64>>,
    detuning: f64,
    #[serde(default)]
    xy_asymmetry: f64,
    #[serde(default)]
    laser_phase: f64,
    #[serde(default = "default_mode_axes")]
    mode_axes: String,
}

fn default_wavelength() -> f64 {
    729.0
}

fn default_mode_axes() -> String {
    "both".into()
}

#[derive(Debug, Deserialize, Clone, PartialEq)]
#[serde(untagged)]
enum TimeValue {
    Number(f64),
    Expr(String),
}

impl TimeValue {
    fn resolve(&self, field: &str) -> Result<f64> {
        match self {
            TimeValue::Number(v) => Ok(*v),
            TimeValue::Expr(s) => parse_pi_expr(s).ok_or_else(|| {
                Error::Config(format!("experiment.{field}: cannot read {s:?} as a time"))
            }),
        }
    }
}

/// Reads `a`, `api`, `pi/b`, `api/b` (spaces and `*` allowed).
fn parse_pi_expr(s: &str) -> Option<f64> {
    let s: String = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '*')
        .collect();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().ok()?),
        None => (s.as_str(), 1.0),
    };
    let value = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some("") => PI,
        Some(a) => a.parse::<f64>().ok()? * PI,
        None => num.parse::<f64>().ok()?,
    };
    Some(value / den)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawExperiment {
    model: String,
    initial_state: Option<String>,
    time_start: TimeValue,
    time_stop: TimeValue,
    time_points: usize,
    protocol: String,
    trotter_steps: usize,
    optimize: bool,
    l_max: usize,
    regions: usize,
    compare_steps: Vec<usize>,
    interaction_range: String,
}

impl Default for RawExperiment {
    fn default() -> Self {
        Self {
            model: "heisenberg".into(),
            initial_state: None,
            time_start: TimeValue::Number(0.0),
            time_stop: TimeValue::Expr("2pi/3".into()),
            time_points: 61,
            protocol: "daqs".into(),
            trotter_steps: 1,
            optimize: true,
            l_max: 4,
            regions: 6,
            compare_steps: vec![1, 2, 3],
            interaction_range: "full".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawErrors {
    gate_infidelity: f64,
    single_qubit_infidelity: f64,
    block_error: String,
    block_infidelity: f64,
}

impl Default for RawErrors {
    fn default() -> Self {
        Self {
            gate_infidelity: 0.0,
            single_qubit_infidelity: 0.0,
            block_error: "simulated".into(),
            block_infidelity: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPhonon {
    model: String,
    n_max: usize,
    rotating_wave: bool,
    compare_rwa: bool,
    steps_per_period: usize,
    tolerance: f64,
    max_halvings: usize,
    step_rule: String,
    dimension_cap: usize,
    block_jt_stop: TimeValue,
    block_points: usize,
}

impl Default for RawPhonon {
    fn default() -> Self {
        let s = PropagationSettings::default();
        Self {
            model: "effective_com".into(),
            n_max: 4,
            rotating_wave: true,
            compare_rwa: false,
            steps_per_period: s.steps_per_period,
            tolerance: s.tolerance,
            max_halvings: s.max_halvings,
            step_rule: "averaged".into(),
            dimension_cap: PhononSpace::DEFAULT_DIMENSION_CAP,
            block_jt_stop: TimeValue::Expr("pi/6".into()),
            block_points: 121,
        }
    }
}

/// Which protocol a run simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolChoice {
    Exact,
    Digital,
    Daqs,
}

/// Source of analog-block infidelities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockErrorSource {
    None,
    Fixed(f64),
    Simulated,
}

/// Time grid in units of `1/J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Resolved experiment settings. Frequencies are angular (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub chain: ChainConfig,
    pub frequency_unit: FrequencyUnit,
    pub model: ModelKind,
    pub initial_state: SpinState,
    pub time_grid: TimeGrid,
    pub protocol: ProtocolChoice,
    pub trotter_steps: usize,
    pub optimize: bool,
    pub l_max: usize,
    pub regions: usize,
    pub compare_steps: Vec<usize>,
    pub interaction_range: InteractionRange,
    pub gate_infidelity: f64,
    pub single_qubit_infidelity: f64,
    pub block_error: BlockErrorSource,
    pub motion_model: MotionModel,
    pub n_max: usize,
    pub rotating_wave: bool,
    pub compare_rwa: bool,
    pub propagation: PropagationSettings,
    pub dimension_cap: usize,
    pub block_jt_stop: f64,
    pub block_points: usize,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses a TOML document and applies `section.key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        // parsing the untouched text first keeps line/column diagnostics
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| cfg(e.to_string()))?;
        if overrides.is_empty() {
            let raw: RawConfig = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
            return Self::resolve(raw);
        }
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw: RawConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| cfg(format!("after overrides: {e}")))?;
        Self::resolve(raw)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::Config(m) => cfg(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let unit = raw.units.frequency;
        let c = raw.chain;
        let n = c.num_ions;
        let rabi = match (c.rabi_frequency, c.rabi_frequencies) {
            (Some(v), None) => vec![unit.to_angular(v); n],
            (None, Some(vs)) => vs.into_iter().map(|v| unit.to_angular(v)).collect(),
            (None, None) => return Err(cfg("chain: give rabi_frequency or rabi_frequencies")),
            (Some(_), Some(_)) => {
                return Err(cfg(
                    "chain: rabi_frequency and rabi_frequencies are exclusive",
                ))
            }
        };
        let mode_axes = match c.mode_axes.as_str() {
            "both" => ModeAxes::Both,
            "x" => ModeAxes::XOnly,
            other => {
                return Err(cfg(format!(
                    "chain.mode_axes: expected \"both\" or \"x\", got {other:?}"
                )))
            }
        };
        let ion_mass = match c.ion_mass_u {
            Some(u) => u * ATOMIC_MASS_UNIT,
            None => crate::ion_chain::ca40_ion_mass(),
        };
        let chain = ChainConfig {
            num_ions: n,
            ion_mass,
            trap_frequencies: c.trap_frequencies.map(|v| unit.to_angular(v)),
            laser_wavelength: c.laser_wavelength_nm * 1e-9,
            rabi_frequencies: rabi,
            detuning: unit.to_angular(c.detuning),
            xy_asymmetry: unit.to_angular(c.xy_asymmetry),
            laser_phase: c.laser_phase,
            mode_axes,
        };
        chain.validate().map_err(|e| cfg(format!("chain: {e}")))?;

        let e = raw.experiment;
        let model: ModelKind = e
            .model
            .parse()
            .map_err(|err| cfg(format!("experiment.model: {err}")))?;
        let initial_state = match &e.initial_state {
            Some(s) => s
                .parse::<SpinState>()
                .map_err(|err| cfg(format!("experiment.initial_state: {err}")))?,
            None => default_state(n)?,
        };
        if initial_state.num_sites() != n {
            return Err(cfg(format!(
                "experiment.initial_state has {} sites, chain has {n} ions",
                initial_state.num_sites()
            )));
        }
        let time_grid = TimeGrid {
            start: e.time_start.resolve("time_start")?,
            stop: e.time_stop.resolve("time_stop")?,
            points: e.time_points,
        };
        if !(time_grid.start >= 0.0 && time_grid.stop > time_grid.start) || time_grid.points < 2 {
            return Err(cfg(format!(
                "experiment: time grid must satisfy 0 ≤ start < stop with at least 2 points, got {time_grid:?}"
            )));
        }
        let protocol = match e.protocol.as_str() {
            "exact" => ProtocolChoice::Exact,
            "digital" => ProtocolChoice::Digital,
            "daqs" => ProtocolChoice::Daqs,
            other => {
                return Err(cfg(format!(
                    "experiment.protocol: unknown protocol {other:?}"
                )))
            }
        };
        if e.trotter_steps == 0 || e.l_max == 0 || e.regions == 0 {
            return Err(cfg(
                "experiment: trotter_steps, l_max and regions must be at least 1",
            ));
        }
        if e.compare_steps.is_empty() || e.compare_steps.contains(&0) {
            return Err(cfg(
                "experiment.compare_steps must list positive step counts",
            ));
        }
        let interaction_range: InteractionRange = e
            .interaction_range
            .parse()
            .map_err(|err| cfg(format!("experiment.interaction_range: {err}")))?;

        let r = raw.errors;
        for (name, v) in [
            ("gate_infidelity", r.gate_infidelity),
            ("single_qubit_infidelity", r.single_qubit_infidelity),
            ("block_infidelity", r.block_infidelity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(cfg(format!("errors.{name} = {v} outside [0, 1]")));
            }
        }
        let block_error = match r.block_error.as_str() {
            "none" => BlockErrorSource::None,
            "fixed" => BlockErrorSource::Fixed(r.block_infidelity),
            "simulated" => BlockErrorSource::Simulated,
            other => return Err(cfg(format!("errors.block_error: unknown source {other:?}"))),
        };

        let p = raw.phonon;
        let motion_model = match p.model.as_str() {
            "effective_com" => MotionModel::EffectiveCom,
            "full" => MotionModel::Full,
            other => return Err(cfg(format!("phonon.model: unknown model {other:?}"))),
        };
        let rule = match p.step_rule.as_str() {
            "averaged" => StepRule::Averaged,
            "midpoint" => StepRule::Midpoint,
            other => return Err(cfg(format!("phonon.step_rule: unknown rule {other:?}"))),
        };
        if p.n_max < 2 || p.steps_per_period == 0 || !(p.tolerance > 0.0) || p.block_points < 2 {
            return Err(cfg(
                "phonon: need n_max ≥ 2, steps_per_period ≥ 1, tolerance > 0, block_points ≥ 2",
            ));
        }
        let block_jt_stop = p.block_jt_stop.resolve("block_jt_stop")?;
        if !(block_jt_stop > 0.0) {
            return Err(cfg("phonon.block_jt_stop must be positive"));
        }
        Ok(Self {
            chain,
            frequency_unit: unit,
            model,
            initial_state,
            time_grid,
            protocol,
            trotter_steps: e.trotter_steps,
            optimize: e.optimize,
            l_max: e.l_max,
            regions: e.regions,
            compare_steps: e.compare_steps,
            interaction_range,
            gate_infidelity: r.gate_infidelity,
            single_qubit_infidelity: r.single_qubit_infidelity,
            block_error,
            motion_model,
            n_max: p.n_max,
            rotating_wave: p.rotating_wave,
            compare_rwa: p.compare_rwa,
            propagation: PropagationSettings {
                steps_per_period: p.steps_per_period,
                tolerance: p.tolerance,
                max_halvings: p.max_halvings,
                rule,
            },
            dimension_cap: p.dimension_cap,
            block_jt_stop,
            block_points: p.block_points,
        })
    }
}

/// All spins down except the middle one.
fn default_state(n: usize) -> Result<SpinState> {
    let s: String = (0..n).map(|k| if k == n / 2 { 'u' } else { 'd' }).collect();
    s.parse()
        .map_err(|e| cfg(format!("default initial state: {e}")))
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, value) = item
        .split_once('=')
        .ok_or_else(|| cfg(format!("override {item:?} is not key=value")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| cfg(format!("override key {path:?} is not section.key")))?;
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), parsed);
            Ok(())
        }
        _ => Err(cfg(format!(
            "override {path:?}: {section} is not a section"
        ))),
    }
}
