//! Analytical-redundancy residuals for the three joint constraints.
//!
//! * torsional: spring torque against deflection through the equivalent stiffness
//! * dynamics: spring torque against motor current and load motion through
//!   the second-order joint model
//! * electrical: motor voltage against resistive drop plus back EMF
//!
//! All residuals are returned as absolute values, ready for low-pass filtering.

use serde::{Deserialize, Serialize};

use crate::dsp::LowPass2;
pub use crate::dsp::DiscreteTF;
use crate::error::{Error, Result};
use crate::plant::JointParams;
use crate::sensors::TelemetryFrame;

/// One value per constraint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerConstraint {
    /// Nm
    pub torsional: f64,
    /// Nm
    pub dynamics: f64,
    /// V
    pub electrical: f64,
}

impl PerConstraint {
    pub fn get(&self, c: Constraint) -> f64 {
        match c {
            Constraint::Torsional => self.torsional,
            Constraint::Dynamics => self.dynamics,
            Constraint::Electrical => self.electrical,
        }
    }

    pub fn get_mut(&mut self, c: Constraint) -> &mut f64 {
        match c {
            Constraint::Torsional => &mut self.torsional,
            Constraint::Dynamics => &mut self.dynamics,
            Constraint::Electrical => &mut self.electrical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Torsional,
    Dynamics,
    Electrical,
}

impl Constraint {
    pub const ALL: [Constraint; 3] = [
        Constraint::Torsional,
        Constraint::Dynamics,
        Constraint::Electrical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::Torsional => "torsional",
            Constraint::Dynamics => "dynamics",
            Constraint::Electrical => "electrical",
        }
    }
}

/// Raw and low-pass-filtered residuals at one telemetry sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualFrame {
    pub t: f64,
    pub raw: PerConstraint,
    pub filtered: PerConstraint,
}

/// `|K_eq·(θ_L − θ_M/G_r) − τ_SEA|` with the nominal model parameters.
pub fn torsional_residual(frame: &TelemetryFrame, params: &JointParams) -> f64 {
    (params.k_eq * (frame.theta_l - frame.theta_m / params.gr) - frame.tau_sea).abs()
}

/// `|V_M − i_M·R − K_e·θ̇_M|`, the winding equation with inductance neglected.
pub fn electrical_residual(frame: &TelemetryFrame, params: &JointParams) -> f64 {
    (frame.v_m - frame.i_m * params.r_motor - params.k_e * frame.omega_m).abs()
}

/// Forward-path and back-impedance filters of the joint transfer function:
///
/// ```text
/// forward(s) = K_T·G_r·K_SEA / (J·s² + B·s + K_SEA)
/// back(s)    = K_SEA·(J·s² + B·s) / (J·s² + B·s + K_SEA)
/// ```
///
/// both discretized with the bilinear transform at `fs`.
pub fn make_dynamics_filters(params: &JointParams, fs: f64) -> Result<(DiscreteTF, DiscreteTF)> {
    let (j, b, k) = (params.j_gear, params.b_gear, params.k_sea);
    let den = [j, b, k];
    let forward = DiscreteTF::bilinear(
        [0.0, 0.0, params.k_t * params.gr * k],
        den,
        fs,
        "dynamics forward path",
    )?;
    let back = DiscreteTF::bilinear([k * j, k * b, 0.0], den, fs, "dynamics back-impedance")?;
    Ok((forward, back))
}

/// Streams one frame through the dynamics filters and returns
/// `|τ_L − forward(i_M) + back(θ_L)|`.
///
/// The load torque is the negated spring reading: the spring sensor reports
/// `K·(θ_L − θ_G)` while the joint model's load torque is `K·(θ_G − θ_L)`.
pub fn dynamics_residual(
    frame: &TelemetryFrame,
    forward: &mut DiscreteTF,
    back: &mut DiscreteTF,
    fs: f64,
) -> Result<f64> {
    for tf in [&*forward, &*back] {
        if (tf.fs - fs).abs() > 1e-9 * fs {
            return Err(Error::SampleRateMismatch {
                expected: tf.fs,
                actual: fs,
            });
        }
    }
    let load_torque = -frame.tau_sea;
    Ok((load_torque - forward.step(frame.i_m) + back.step(frame.theta_l)).abs())
}

/// Per-run residual generator: raw residuals plus their low-pass filters.
#[derive(Debug, Clone)]
pub struct ResidualGenerator {
    params: JointParams,
    fs: f64,
    forward: DiscreteTF,
    back: DiscreteTF,
    lowpass: [LowPass2; 3],
}

impl ResidualGenerator {
    pub fn new(params: &JointParams, fs: f64, cutoff_hz: f64) -> Result<Self> {
        let (forward, back) = make_dynamics_filters(params, fs)?;
        let lp = LowPass2::new(cutoff_hz, fs)?;
        Ok(ResidualGenerator {
            params: params.clone(),
            fs,
            forward,
            back,
            lowpass: [lp.clone(), lp.clone(), lp],
        })
    }

    /// Raw residuals only; advances the dynamics filter state.
    pub fn raw(&mut self, frame: &TelemetryFrame) -> Result<PerConstraint> {
        Ok(PerConstraint {
            torsional: torsional_residual(frame, &self.params),
            dynamics: dynamics_residual(frame, &mut self.forward, &mut self.back, self.fs)?,
            electrical: electrical_residual(frame, &self.params),
        })
    }

    pub fn process(&mut self, frame: &TelemetryFrame) -> Result<ResidualFrame> {
        let raw = self.raw(frame)?;
        let mut filtered = PerConstraint::default();
        for (c, lp) in Constraint::ALL.iter().zip(self.lowpass.iter_mut()) {
            *filtered.get_mut(*c) = lp.step(raw.get(*c));
        }
        Ok(ResidualFrame {
            t: frame.t,
            raw,
            filtered,
        })
    }
}
