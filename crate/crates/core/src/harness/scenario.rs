//! Scenario description and its on-disk format.
//!
//! A scenario file is TOML with one section per sub-structure:
//!
//! ```toml
//! [scenario]      # label, duration, dt, sensor_rate, cutoff_hz, seed
//! [params]        # JointParams; k_sea/k_gear optional (derived from k_eq)
//! [excitation]    # kind, amplitude, frequency, offset
//! [noise]         # bandwidth, plus [noise.std] per channel
//! [thresholds]    # torsional, dynamics, electrical, settling
//! [[faults]]      # zero or more: channel, kind, onset, bias_magnitude
//! ```
//!
//! Unknown keys are rejected.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::Thresholds;
use crate::error::{Error, Result};
use crate::plant::{Excitation, ExcitationKind, JointParams};
use crate::sensors::{Channel, ChannelStd, FaultKind, FaultSpec, NoiseSpec};

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub label: String,
    /// Simulated time (s).
    pub duration: f64,
    /// Plant integration step (s).
    pub dt: f64,
    /// Telemetry sample rate (Hz); must divide `1/dt`.
    pub sensor_rate: f64,
    /// Residual low-pass cutoff (Hz).
    pub cutoff_hz: f64,
    pub seed: u64,
    pub params: JointParams,
    pub excitation: Excitation,
    pub noise: NoiseSpec,
    pub faults: Vec<FaultSpec>,
    pub thresholds: Thresholds,
}

/// Onset of the bias fault in the bundled bias scenario (s).
pub const BIAS_ONSET: f64 = 5.0;
/// Onset of the stuck fault in the bundled stuck scenario (s).
pub const STUCK_ONSET: f64 = 3.1;
/// Default bias added to the spring torque reading (Nm).
pub const DEFAULT_TORQUE_BIAS: f64 = 20.0;
/// Drive voltage amplitude of the bundled stuck scenario (V).
pub const STUCK_EXCITATION_AMPLITUDE: f64 = 15.0;

impl Scenario {
    /// Fault-free 10 s run with the default joint constants.
    pub fn nominal() -> Self {
        Scenario {
            label: "nominal".into(),
            duration: 10.0,
            dt: 0.5e-3,
            sensor_rate: 1000.0,
            cutoff_hz: 5.0,
            seed: 1,
            params: JointParams::defaults(),
            excitation: Excitation {
                kind: ExcitationKind::OpenLoopVoltage,
                amplitude: 9.0,
                frequency: 1.0,
                offset: 0.0,
            },
            noise: NoiseSpec {
                std: ChannelStd {
                    theta_m: 0.5,
                    omega_m: 20.0,
                    i_m: 0.05,
                    v_m: 0.05,
                    theta_l: 0.005,
                    tau_sea: 0.3,
                },
                bandwidth: 50.0,
            },
            faults: Vec::new(),
            thresholds: Thresholds {
                torsional: 12.0,
                dynamics: 3.6,
                electrical: 0.25,
                settling: 0.2,
            },
        }
    }

    /// Spring torque reading offset by [`DEFAULT_TORQUE_BIAS`] from 5 s.
    pub fn bias() -> Self {
        Scenario {
            label: "bias".into(),
            faults: vec![FaultSpec {
                channel: Channel::TauSea,
                kind: FaultKind::Bias,
                onset: BIAS_ONSET,
                bias_magnitude: DEFAULT_TORQUE_BIAS,
            }],
            ..Self::nominal()
        }
    }

    /// Spring torque reading frozen from 3.1 s, under a stronger drive so the
    /// true spring torque swings well away from the frozen value.
    pub fn stuck() -> Self {
        let nominal = Self::nominal();
        Scenario {
            label: "stuck".into(),
            excitation: Excitation {
                amplitude: STUCK_EXCITATION_AMPLITUDE,
                ..nominal.excitation
            },
            faults: vec![FaultSpec {
                channel: Channel::TauSea,
                kind: FaultKind::Stuck,
                onset: STUCK_ONSET,
                bias_magnitude: 0.0,
            }],
            ..nominal
        }
    }

    /// Plant steps per telemetry sample.
    pub fn decimation(&self) -> usize {
        (1.0 / (self.dt * self.sensor_rate)).round() as usize
    }

    /// Number of telemetry samples after t = 0.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sensor_rate + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let top = [
            ("duration", self.duration),
            ("dt", self.dt),
            ("sensor_rate", self.sensor_rate),
            ("cutoff_hz", self.cutoff_hz),
        ];
        for (name, v) in top {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("scenario.{name}"), "must be finite and > 0"));
            }
        }
        let ratio = 1.0 / (self.dt * self.sensor_rate);
        if ratio < 1.0 - 1e-9 {
            return Err(Error::config("scenario.sensor_rate", "must not exceed 1/dt"));
        }
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::config(
                "scenario.sensor_rate",
                "1/dt must be an integer multiple of the sensor rate",
            ));
        }
        if self.cutoff_hz >= self.sensor_rate / 2.0 {
            return Err(Error::config("scenario.cutoff_hz", "must be below sensor_rate/2"));
        }
        self.params.validate().map_err(|e| prefix("params", e))?;
        self.excitation.validate().map_err(|e| prefix("excitation", e))?;
        self.noise.validate().map_err(|e| prefix("noise", e))?;
        if self.noise.bandwidth >= self.sensor_rate / 2.0 {
            return Err(Error::config("noise.bandwidth", "must be below sensor_rate/2"));
        }
        self.thresholds.validate().map_err(|e| prefix("thresholds", e))?;
        let mut seen = HashSet::new();
        for (k, f) in self.faults.iter().enumerate() {
            f.validate().map_err(|e| prefix(&format!("faults[{k}]"), e))?;
            if !seen.insert(f.channel) {
                return Err(Error::config(
                    format!("faults[{k}].channel"),
                    format!("more than one fault on `{}`", f.channel),
                ));
            }
        }
        Ok(())
    }

    /// Parses scenario text, applies `key=value` overrides, and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let file: ScenarioFile = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| parse_error(text, &e))?
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            ScenarioFile::deserialize(toml::Value::Table(table)).map_err(|e| Error::Parse {
                line: 0,
                message: format!("after overrides: {}", e.message()),
            })?
        };
        let scenario = file.into_scenario()?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ScenarioFile::from_scenario(self))
            .expect("scenario always serializes to TOML")
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>, overrides: &[String]) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_toml_str(&text, overrides)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml_string()).map_err(|e| Error::io(path, e))
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Config { field, reason } => Error::Config {
            field: format!("{section}.{field}"),
            reason,
        },
        other => other,
    }
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::Parse {
        line,
        message: e.message().to_string(),
    }
}

/// `dotted.path=value`; numeric path segments index arrays (`faults.0.onset=4`).
/// The value is read as a TOML literal, falling back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config("override", format!("`{spec}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts
        .split_last()
        .filter(|(l, _)| !l.is_empty())
        .ok_or_else(|| Error::config("override", format!("empty key in `{spec}`")))?;
    let bad = || Error::config(key.to_string(), "override path does not exist");
    let mut cursor: &mut toml::Value = table
        .get_mut(path.first().copied().unwrap_or(last))
        .ok_or_else(bad)?;
    if path.is_empty() {
        *cursor = value;
        return Ok(());
    }
    for seg in &path[1..] {
        cursor = step_into(cursor, seg).ok_or_else(bad)?;
    }
    match cursor {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let slot = last
                .parse::<usize>()
                .ok()
                .and_then(|i| a.get_mut(i))
                .ok_or_else(bad)?;
            *slot = value;
        }
        _ => return Err(bad()),
    }
    Ok(())
}

fn step_into<'a>(v: &'a mut toml::Value, seg: &str) -> Option<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => t.get_mut(seg),
        toml::Value::Array(a) => seg.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
        _ => None,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    label: String,
    duration: f64,
    dt: f64,
    sensor_rate: f64,
    cutoff_hz: f64,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    k1: f64,
    k2: f64,
    g1: f64,
    gr: f64,
    k_eq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_sea: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_gear: Option<f64>,
    j_gear: f64,
    b_gear: f64,
    j_load: f64,
    k_t: f64,
    k_e: f64,
    r_motor: f64,
    l_motor: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: RunSection,
    params: ParamsSection,
    excitation: Excitation,
    noise: NoiseSpec,
    thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    faults: Vec<FaultSpec>,
}

impl ParamsSection {
    fn into_params(self) -> Result<JointParams> {
        let (k_sea, k_gear) = match (self.k_sea, self.k_gear) {
            (Some(s), Some(g)) => (s, g),
            (None, None) => JointParams::split_equivalent_stiffness(self.k_eq),
            (Some(s), None) => {
                let inv = 1.0 / self.k_eq - 1.0 / s;
                if inv < 0.0 {
                    return Err(Error::config("params.k_sea", "must be >= k_eq"));
                }
                (s, 1.0 / inv)
            }
            (None, Some(g)) => {
                let inv = 1.0 / self.k_eq - 1.0 / g;
                if inv <= 0.0 {
                    return Err(Error::config("params.k_gear", "must be > k_eq"));
                }
                (1.0 / inv, g)
            }
        };
        Ok(JointParams {
            k1: self.k1,
            k2: self.k2,
            g1: self.g1,
            gr: self.gr,
            k_eq: self.k_eq,
            k_sea,
            k_gear,
            j_gear: self.j_gear,
            b_gear: self.b_gear,
            j_load: self.j_load,
            k_t: self.k_t,
            k_e: self.k_e,
            r_motor: self.r_motor,
            l_motor: self.l_motor,
        })
    }

    fn from_params(p: &JointParams) -> Self {
        ParamsSection {
            k1: p.k1,
            k2: p.k2,
            g1: p.g1,
            gr: p.gr,
            k_eq: p.k_eq,
            k_sea: Some(p.k_sea),
            k_gear: Some(p.k_gear),
            j_gear: p.j_gear,
            b_gear: p.b_gear,
            j_load: p.j_load,
            k_t: p.k_t,
            k_e: p.k_e,
            r_motor: p.r_motor,
            l_motor: p.l_motor,
        }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        Ok(Scenario {
            label: self.scenario.label,
            duration: self.scenario.duration,
            dt: self.scenario.dt,
            sensor_rate: self.scenario.sensor_rate,
            cutoff_hz: self.scenario.cutoff_hz,
            seed: self.scenario.seed,
            params: self.params.into_params()?,
            excitation: self.excitation,
            noise: self.noise,
            faults: self.faults,
            thresholds: self.thresholds,
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            scenario: RunSection {
                label: s.label.clone(),
                duration: s.duration,
                dt: s.dt,
                sensor_rate: s.sensor_rate,
                cutoff_hz: s.cutoff_hz,
                seed: s.seed,
            },
            params: ParamsSection::from_params(&s.params),
            excitation: s.excitation,
            noise: s.noise,
            thresholds: s.thresholds,
            faults: s.faults.clone(),
        }
    }
}
