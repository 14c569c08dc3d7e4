//! Run configuration: JSON file format, flag overrides and validation.

use std::path::{Path, PathBuf};

use holonome::experiments::{
    Truncation, DEFAULT_G0_MHZ, DEFAULT_N_TH, DEFAULT_SWEEP_POINTS, GAMMA_RANGE, KAPPA_RANGE, SWEEP_DT,
};
use holonome::holonomy::{catalog, GateName, GateSpec};
use holonome::lindblad::{IntegratorConfig, NoiseParams};
use holonome::model::{mhz_over_2pi, RateConvention};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Gate,
    Transfer,
    Entangle,
    Sweep,
    Verify,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Gate => "gate",
            Experiment::Transfer => "transfer",
            Experiment::Entangle => "entangle",
            Experiment::Sweep => "sweep",
            Experiment::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyUnit {
    /// Value is `G₀/2π` in MHz.
    #[serde(rename = "mhz_over_2pi")]
    MhzOver2pi,
    RadPerUs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Us,
}

/// Unit of every physical quantity in the file. Required in file mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub g0: FrequencyUnit,
    pub kappa: RateConvention,
    pub gamma_m: RateConvention,
    pub time: TimeUnit,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            g0: FrequencyUnit::MhzOver2pi,
            kappa: RateConvention::Angular,
            gamma_m: RateConvention::Angular,
            time: TimeUnit::Us,
        }
    }
}

/// Either a catalog name or explicit Bloch angles.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateChoice {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<GateName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

/// Dissipation as quoted, interpreted through `units`. `κ₁ = κ₂ = kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub kappa: f64,
    pub gamma_m: f64,
    pub n_th: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { kappa: 0.0, gamma_m: 0.0, n_th: DEFAULT_N_TH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub points: usize,
    /// `[min, max]`, log-spaced, same units as `noise.kappa`
    pub kappa_range: [f64; 2],
    pub gamma_m_range: [f64; 2],
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            points: DEFAULT_SWEEP_POINTS,
            kappa_range: [KAPPA_RANGE.0, KAPPA_RANGE.1],
            gamma_m_range: [GAMMA_RANGE.0, GAMMA_RANGE.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("holonome-out"), formats: vec![Format::Csv, Format::Svg] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub units: Units,
    #[serde(default)]
    pub gate: GateChoice,
    #[serde(default = "default_g0")]
    pub g0: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Sweeps keep only the final state, so they default to a coarser step.
fn default_integrator(experiment: Experiment) -> IntegratorConfig {
    match experiment {
        Experiment::Sweep => IntegratorConfig { dt: SWEEP_DT, ..IntegratorConfig::default() }.with_samples(1),
        _ => IntegratorConfig::default(),
    }
}

fn default_g0() -> f64 {
    DEFAULT_G0_MHZ
}

/// Top-level keys that may be omitted from a config file.
const OPTIONAL_KEYS: [&str; 7] = ["gate", "g0", "noise", "integrator", "truncation", "sweep", "output"];

/// A flag that replaced a file or default value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub field: String,
    pub previous: Value,
    pub value: Value,
}

/// How a config came to be: keys filled from defaults and flag overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub defaults_filled: Vec<String>,
    pub overrides: Vec<Override>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlagOverrides {
    pub gate: Option<GateName>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub g0_mhz_over_2pi: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma_m: Option<f64>,
    pub n_th: Option<f64>,
    pub rate_convention: Option<RateConvention>,
    pub dt: Option<f64>,
    pub samples: Option<usize>,
    pub mech_cutoff: Option<usize>,
    pub points: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            units: Units::default(),
            gate: GateChoice::default(),
            g0: default_g0(),
            noise: NoiseConfig::default(),
            integrator: default_integrator(experiment),
            truncation: Truncation::default(),
            sweep: SweepAxes::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parse a config file, or the `config` block of a run manifest.
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        if let Some(inner) = value.get("config").filter(|_| value.get("artifact").is_some()) {
            value = inner.clone();
        }
        let Value::Object(map) = &value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let defaults_filled = OPTIONAL_KEYS.iter().filter(|k| !map.contains_key(**k)).map(|k| k.to_string()).collect();
        let has_integrator = map.contains_key("integrator");
        let mut config: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        if !has_integrator {
            config.integrator = default_integrator(config.experiment);
        }
        config.validate()?;
        Ok((config, defaults_filled))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    /// Apply flags on top of `self`, returning what changed.
    pub fn apply(&mut self, flags: &FlagOverrides) -> Vec<Override> {
        let mut log = Vec::new();
        let mut set = |field: &str, slot: Value, new: Value| {
            if slot != new {
                log.push(Override { field: field.to_string(), previous: slot, value: new });
            }
        };

        if let Some(name) = flags.gate {
            set("gate.name", json(&self.gate.name), json(&Some(name)));
            self.gate.name = Some(name);
        }
        if let Some(theta) = flags.theta {
            set("gate.theta", json(&self.gate.theta), json(&Some(theta)));
            self.gate.theta = Some(theta);
        }
        if let Some(phi) = flags.phi {
            set("gate.phi", json(&self.gate.phi), json(&Some(phi)));
            self.gate.phi = Some(phi);
        }
        if let Some(g0) = flags.g0_mhz_over_2pi {
            set("g0", json(&self.g0), json(&g0));
            set("units.g0", json(&self.units.g0), json(&FrequencyUnit::MhzOver2pi));
            self.g0 = g0;
            self.units.g0 = FrequencyUnit::MhzOver2pi;
        }
        if let Some(conv) = flags.rate_convention {
            set("units.kappa", json(&self.units.kappa), json(&conv));
            set("units.gamma_m", json(&self.units.gamma_m), json(&conv));
            self.units.kappa = conv;
            self.units.gamma_m = conv;
        }
        if let Some(kappa) = flags.kappa {
            set("noise.kappa", json(&self.noise.kappa), json(&kappa));
            self.noise.kappa = kappa;
        }
        if let Some(gamma_m) = flags.gamma_m {
            set("noise.gamma_m", json(&self.noise.gamma_m), json(&gamma_m));
            self.noise.gamma_m = gamma_m;
        }
        if let Some(n_th) = flags.n_th {
            set("noise.n_th", json(&self.noise.n_th), json(&n_th));
            self.noise.n_th = n_th;
        }
        if let Some(dt) = flags.dt {
            set("integrator.dt", json(&self.integrator.dt), json(&dt));
            self.integrator.dt = dt;
        }
        if let Some(samples) = flags.samples {
            set("integrator.samples", json(&self.integrator.samples), json(&samples));
            self.integrator.samples = samples;
        }
        if let Some(mech) = flags.mech_cutoff {
            set("truncation.mechanical", json(&self.truncation.mechanical), json(&mech));
            self.truncation.mechanical = mech;
        }
        if let Some(points) = flags.points {
            set("sweep.points", json(&self.sweep.points), json(&points));
            self.sweep.points = points;
        }
        if let Some(out) = &flags.out {
            set("output.dir", json(&self.output.dir), json(out));
            self.output.dir = out.clone();
        }
        if let Some(formats) = &flags.formats {
            set("output.formats", json(&self.output.formats), json(formats));
            self.output.formats = formats.clone();
        }
        log
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.g0.is_finite() && self.g0 > 0.0) {
            return bad(format!("g0 must be finite and positive, got {}", self.g0));
        }
        for (name, v) in
            [("noise.kappa", self.noise.kappa), ("noise.gamma_m", self.noise.gamma_m), ("noise.n_th", self.noise.n_th)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, v) in [("gate.theta", self.gate.theta), ("gate.phi", self.gate.phi)] {
            if let Some(v) = v.filter(|v| !v.is_finite()) {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        self.integrator.validate()?;
        self.truncation.space()?;

        let explicit_angles = self.gate.theta.is_some() || self.gate.phi.is_some();
        if explicit_angles && self.gate.name.is_some() {
            return bad("give either gate.name or gate.theta/gate.phi, not both".into());
        }
        match self.experiment {
            Experiment::Transfer | Experiment::Entangle if explicit_angles || self.gate.name.is_some() => {
                return bad(format!(
                    "`{}` uses a fixed gate; use `gate` or `sweep` to choose one",
                    self.experiment.as_str()
                ));
            }
            Experiment::Sweep => {
                if explicit_angles {
                    return bad("sweeps take a gate name, not angles".into());
                }
                if self.units.kappa != self.units.gamma_m {
                    return bad("sweeps need the same rate convention for kappa and gamma_m".into());
                }
                let s = &self.sweep;
                if s.points == 0 {
                    return bad("sweep.points must be at least 1".into());
                }
                for (name, [lo, hi]) in [("sweep.kappa_range", s.kappa_range), ("sweep.gamma_m_range", s.gamma_m_range)]
                {
                    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                        return bad(format!("{name} must satisfy 0 < min <= max, got [{lo}, {hi}]"));
                    }
                }
            }
            _ => {}
        }
        self.gate_specs()?;
        Ok(())
    }

    /// `G₀` in rad/μs.
    pub fn g0_angular(&self) -> f64 {
        match self.units.g0 {
            FrequencyUnit::MhzOver2pi => mhz_over_2pi(self.g0),
            FrequencyUnit::RadPerUs => self.g0,
        }
    }

    pub fn noise_angular(&self) -> NoiseParams {
        NoiseParams::symmetric(
            self.units.kappa.to_angular(self.noise.kappa),
            self.units.gamma_m.to_angular(self.noise.gamma_m),
            self.noise.n_th,
        )
    }

    /// Gate name in effect for this experiment, when one applies.
    pub fn gate_name(&self) -> Option<GateName> {
        match self.experiment {
            Experiment::Transfer => Some(GateName::Not),
            Experiment::Entangle => Some(GateName::Hadamard),
            _ if self.gate.theta.is_some() || self.gate.phi.is_some() => None,
            _ => Some(self.gate.name.unwrap_or(GateName::Not)),
        }
    }

    /// Pulses in execution order.
    pub fn gate_specs(&self) -> Result<Vec<GateSpec>> {
        match self.gate_name() {
            Some(name) => Ok(catalog(name)),
            None => Ok(vec![GateSpec::from_angles(self.gate.theta.unwrap_or(0.0), self.gate.phi.unwrap_or(0.0))?]),
        }
    }
}

/// Build the config for one invocation: file (or defaults) with flags on top.
pub fn parse_config(
    experiment: Experiment,
    path: Option<&Path>,
    flags: &FlagOverrides,
) -> Result<(RunConfig, Provenance)> {
    let (mut config, defaults_filled) = match path {
        Some(p) => RunConfig::load(p)?,
        None => {
            let all = std::iter::once("units").chain(OPTIONAL_KEYS).map(String::from).collect();
            (RunConfig::defaults(experiment), all)
        }
    };
    if config.experiment != experiment {
        return Err(CliError::Config(format!(
            "config is for `{}` but `{}` was requested",
            config.experiment.as_str(),
            experiment.as_str()
        )));
    }
    let overrides = config.apply(flags);
    config.validate()?;
    Ok((config, Provenance { source: path.map(Path::to_path_buf), defaults_filled, overrides }))
}

fn json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "transfer",
        "units": { "g0": "mhz_over_2pi", "kappa": "angular", "gamma_m": "angular", "time": "us" },
        "g0": 2.8284271247461903
    }"#;

    #[test]
    fn minimal_transfer_config() {
        let (config, defaults) = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(config.experiment, Experiment::Transfer);
        assert!(defaults.contains(&"noise".to_string()));
        assert!(!defaults.contains(&"g0".to_string()));
        let tau = std::f64::consts::PI / config.g0_angular();
        assert!((tau - 0.17678).abs() < 1e-5);
        assert_eq!(config.gate_name(), Some(GateName::Not));
    }

    #[test]
    fn negative_kappa_rejected() {
        let text = MINIMAL.replace("\"g0\": 2.8284271247461903", "\"noise\": { \"kappa\": -0.1 }");
        assert!(matches!(RunConfig::from_json(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_and_missing_units_rejected() {
        let unknown = MINIMAL.replace("\"experiment\"", "\"colour\": 1, \"experiment\"");
        assert!(matches!(RunConfig::from_json(&unknown), Err(CliError::Config(_))));
        let nested = MINIMAL.replace("\"time\": \"us\"", "\"time\": \"us\", \"dt\": \"us\"");
        assert!(RunConfig::from_json(&nested).is_err());
        assert!(RunConfig::from_json(r#"{ "experiment": "transfer" }"#).is_err());
        let partial = MINIMAL.replace(", \"time\": \"us\"", "");
        assert!(RunConfig::from_json(&partial).is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut config = RunConfig::defaults(Experiment::Sweep);
        config.noise.kappa = 0.1 + 0.2;
        config.integrator.dt = 1.0 / 3.0 * 1e-4;
        config.gate.name = Some(GateName::Hadamard);
        let (back, defaults) = RunConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(back, config);
        assert!(defaults.is_empty());
    }

    #[test]
    fn flags_win_and_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, MINIMAL).unwrap();
        let flags = FlagOverrides { kappa: Some(0.5), dt: Some(1e-4), ..Default::default() };
        let (config, prov) = parse_config(Experiment::Transfer, Some(&path), &flags).unwrap();
        assert_eq!(config.noise.kappa, 0.5);
        let fields: Vec<_> = prov.overrides.iter().map(|o| o.field.as_str()).collect();
        assert_eq!(fields, ["noise.kappa", "integrator.dt"]);
        assert!(parse_config(Experiment::Sweep, Some(&path), &flags).is_err());
    }

    #[test]
    fn gate_selection_rules() {
        let mut c = RunConfig::defaults(Experiment::Gate);
        c.gate.theta = Some(0.3);
        assert!(c.validate().is_ok());
        assert_eq!(c.gate_specs().unwrap().len(), 1);
        c.gate.name = Some(GateName::Not);
        assert!(c.validate().is_err());

        let mut t = RunConfig::defaults(Experiment::Transfer);
        t.gate.name = Some(GateName::Hadamard);
        assert!(t.validate().is_err());

        let mut s = RunConfig::defaults(Experiment::Sweep);
        s.units.gamma_m = RateConvention::Linear;
        assert!(s.validate().is_err());
    }

    #[test]
    fn linear_convention_scales_rates() {
        let mut c = RunConfig::defaults(Experiment::Transfer);
        c.noise.kappa = 1.0;
        c.units.kappa = RateConvention::Linear;
        let n = c.noise_angular();
        assert!((n.kappa1 - std::f64::consts::TAU).abs() < 1e-15);
        assert_eq!(n.kappa1, n.kappa2);
    }
}
