//! Sensor models: projection of the true plant state onto the six measured
//! channels, band-limited measurement noise, and fault injection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsp::BandLimitedNoise;
use crate::error::{Error, Result};
use crate::plant::{JointParams, PlantState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    ThetaM,
    OmegaM,
    IM,
    VM,
    ThetaL,
    TauSea,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::ThetaM,
        Channel::OmegaM,
        Channel::IM,
        Channel::VM,
        Channel::ThetaL,
        Channel::TauSea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::ThetaM => "theta_m",
            Channel::OmegaM => "omega_m",
            Channel::IM => "i_m",
            Channel::VM => "v_m",
            Channel::ThetaL => "theta_l",
            Channel::TauSea => "tau_sea",
        }
    }

    fn index(self) -> usize {
        Channel::ALL.iter().position(|c| *c == self).unwrap()
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One timestamped set of sensor readings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub t: f64,
    /// Motor angle (deg).
    pub theta_m: f64,
    /// Motor angular velocity (deg/s).
    pub omega_m: f64,
    /// Motor current (A).
    pub i_m: f64,
    /// Motor voltage (V).
    pub v_m: f64,
    /// Load angle (deg).
    pub theta_l: f64,
    /// Spring torque (Nm).
    pub tau_sea: f64,
}

impl TelemetryFrame {
    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::ThetaM => self.theta_m,
            Channel::OmegaM => self.omega_m,
            Channel::IM => self.i_m,
            Channel::VM => self.v_m,
            Channel::ThetaL => self.theta_l,
            Channel::TauSea => self.tau_sea,
        }
    }

    pub fn get_mut(&mut self, channel: Channel) -> &mut f64 {
        match channel {
            Channel::ThetaM => &mut self.theta_m,
            Channel::OmegaM => &mut self.omega_m,
            Channel::IM => &mut self.i_m,
            Channel::VM => &mut self.v_m,
            Channel::ThetaL => &mut self.theta_l,
            Channel::TauSea => &mut self.tau_sea,
        }
    }

    /// Noise-free readings of the true state.
    pub fn from_state(state: &PlantState, params: &JointParams) -> Self {
        let theta_m = params.g1 * state.theta_g;
        TelemetryFrame {
            t: state.t,
            theta_m,
            omega_m: params.g1 * state.omega_g,
            i_m: state.i_m,
            v_m: state.v_m,
            theta_l: state.theta_l,
            tau_sea: crate::plant::true_spring_torque(params, state.theta_l, theta_m),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.theta_m, self.omega_m, self.i_m, self.v_m, self.theta_l, self.tau_sea]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Noise standard deviation per channel, in channel units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelStd {
    pub theta_m: f64,
    pub omega_m: f64,
    pub i_m: f64,
    pub v_m: f64,
    pub theta_l: f64,
    pub tau_sea: f64,
}

impl ChannelStd {
    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::ThetaM => self.theta_m,
            Channel::OmegaM => self.omega_m,
            Channel::IM => self.i_m,
            Channel::VM => self.v_m,
            Channel::ThetaL => self.theta_l,
            Channel::TauSea => self.tau_sea,
        }
    }
}

/// Band-limited measurement noise configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub std: ChannelStd,
    /// First-order noise bandwidth (Hz), shared by all channels.
    pub bandwidth: f64,
}

impl NoiseSpec {
    pub fn silent() -> Self {
        NoiseSpec {
            std: ChannelStd::default(),
            bandwidth: 50.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Channel::ALL {
            let s = self.std.get(c);
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::config(format!("std.{c}"), "must be finite and >= 0"));
            }
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::config("bandwidth", "must be > 0"));
        }
        Ok(())
    }
}

/// Per-run sensor suite owning one independent noise stream per channel.
#[derive(Debug, Clone)]
pub struct Sensors {
    noise: Vec<BandLimitedNoise>,
}

impl Sensors {
    /// Channel `k` draws from ChaCha stream `k` of `seed`, so the noise on one
    /// channel never depends on the configuration of another.
    pub fn new(spec: &NoiseSpec, fs: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        let noise = Channel::ALL
            .iter()
            .map(|c| {
                BandLimitedNoise::seeded(spec.std.get(*c), spec.bandwidth, fs, seed, c.index() as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sensors { noise })
    }

    /// Noisy readings of `state`.
    pub fn measure(&mut self, state: &PlantState, params: &JointParams) -> TelemetryFrame {
        let mut frame = TelemetryFrame::from_state(state, params);
        for (c, n) in Channel::ALL.iter().zip(self.noise.iter_mut()) {
            *frame.get_mut(*c) += n.next_sample();
        }
        frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    None,
    Bias,
    Stuck,
}

/// A single-sensor fault starting at `onset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub channel: Channel,
    pub kind: FaultKind,
    pub onset: f64,
    #[serde(default)]
    pub bias_magnitude: f64,
}

impl FaultSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.onset.is_finite() && self.onset >= 0.0) {
            return Err(Error::config("onset", "must be finite and >= 0"));
        }
        if self.kind == FaultKind::Bias && !self.bias_magnitude.is_finite() {
            return Err(Error::config("bias_magnitude", "must be finite"));
        }
        Ok(())
    }
}

/// Applies `fault` to one frame. `memory` carries the last pre-onset reading
/// of the faulted channel and must persist across the frames of a run.
pub fn inject_fault(
    frame: &TelemetryFrame,
    fault: &FaultSpec,
    memory: &mut Option<f64>,
) -> Result<TelemetryFrame> {
    let mut out = *frame;
    if frame.t < fault.onset {
        *memory = Some(frame.get(fault.channel));
        return Ok(out);
    }
    match fault.kind {
        FaultKind::None => {}
        FaultKind::Bias => *out.get_mut(fault.channel) += fault.bias_magnitude,
        FaultKind::Stuck => {
            let frozen = memory.ok_or(Error::StuckWithoutHistory {
                channel: fault.channel.name(),
                onset: fault.onset,
            })?;
            *out.get_mut(fault.channel) = frozen;
        }
    }
    Ok(out)
}

/// Stateful wrapper around [`inject_fault`] for one run.
#[derive(Debug, Clone)]
pub struct FaultInjector {
    pub spec: FaultSpec,
    memory: Option<f64>,
}

impl FaultInjector {
    pub fn new(spec: FaultSpec) -> Self {
        FaultInjector { spec, memory: None }
    }

    pub fn apply(&mut self, frame: &TelemetryFrame) -> Result<TelemetryFrame> {
        inject_fault(frame, &self.spec, &mut self.memory)
    }
}
