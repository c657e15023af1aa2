//! Ground-truth physics of the series elastic joint.
//!
//! The plant is a DC motor (RL circuit with back EMF) driving a gearbox
//! output inertia through an ideal gear of ratio `g1`. A torsional spring
//! with a slightly nonlinear characteristic couples the gearbox output to a
//! free load inertia. Angles are in degrees, torques in Nm, time in seconds.
//!
//! Spring torque sign: `tau_sea = k1·Δ + k2·Δ²` with `Δ = θ_L − θ_M/G₁`.
//! The spring pushes the gearbox output with `+tau_sea` and the load with
//! `−tau_sea`, so a positive deflection is restoring on both sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the joint: the true plant coefficients plus the
/// nominal model coefficients the diagnostics use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    /// True linear spring coefficient (Nm/deg).
    pub k1: f64,
    /// True quadratic spring coefficient (Nm/deg²).
    pub k2: f64,
    /// True gear ratio.
    pub g1: f64,
    /// Nominal gear ratio used by the model constraints.
    pub gr: f64,
    /// Nominal equivalent stiffness of spring and gear train in series (Nm/deg).
    pub k_eq: f64,
    /// Nominal spring stiffness (Nm/deg).
    pub k_sea: f64,
    /// Nominal gear-train stiffness (Nm/deg). `inf` means a rigid gear train.
    pub k_gear: f64,
    /// Gearbox output inertia (Nm·s²/deg).
    pub j_gear: f64,
    /// Viscous damping at the gearbox output (Nm·s/deg).
    pub b_gear: f64,
    /// Load inertia (Nm·s²/deg).
    pub j_load: f64,
    /// Motor torque constant at the motor shaft (Nm/A).
    pub k_t: f64,
    /// Motor velocity constant (V·s/deg, motor side).
    pub k_e: f64,
    /// Winding resistance (Ω).
    pub r_motor: f64,
    /// Winding inductance (H).
    pub l_motor: f64,
}

/// Ratio between gear-train and spring stiffness used when only `k_eq` is given.
pub const GEAR_TO_SPRING_STIFFNESS: f64 = 4.0;

impl JointParams {
    /// Spring and gear-train stiffness whose series combination is `k_eq`,
    /// with the gear train four times stiffer than the spring.
    pub fn split_equivalent_stiffness(k_eq: f64) -> (f64, f64) {
        let k_sea = k_eq * (1.0 + 1.0 / GEAR_TO_SPRING_STIFFNESS);
        (k_sea, GEAR_TO_SPRING_STIFFNESS * k_sea)
    }

    /// Default joint: the reference spring, gear and stiffness values together
    /// with mechanical and electrical constants tuned for a well-damped
    /// 12.5 Hz joint mode (damping ratio about 0.71).
    pub fn defaults() -> Self {
        let k_eq = 80.0;
        let (k_sea, k_gear) = Self::split_equivalent_stiffness(k_eq);
        let k_t = 0.05;
        JointParams {
            k1: 100.0,
            k2: 0.02,
            g1: 105.05,
            gr: 105.0,
            k_eq,
            k_sea,
            k_gear,
            j_gear: 0.005,
            b_gear: 0.3,
            j_load: 0.025,
            k_t,
            // Power-consistent with k_t once degrees are converted to radians.
            k_e: k_t * std::f64::consts::PI / 180.0,
            r_motor: 0.5,
            l_motor: 0.5e-3,
        }
    }

    /// Copy of `self` with no model mismatch: linear spring, exact gear
    /// ratio, rigid gear train and a purely resistive winding.
    pub fn matched(&self) -> Self {
        JointParams {
            k2: 0.0,
            gr: self.g1,
            k_eq: self.k1,
            k_sea: self.k1,
            k_gear: f64::INFINITY,
            l_motor: 0.0,
            ..self.clone()
        }
    }

    /// Checks every invariant. Error fields name the offending member.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("g1", self.g1),
            ("gr", self.gr),
            ("k_eq", self.k_eq),
            ("k_sea", self.k_sea),
            ("j_gear", self.j_gear),
            ("b_gear", self.b_gear),
            ("j_load", self.j_load),
            ("k_t", self.k_t),
            ("k_e", self.k_e),
            ("r_motor", self.r_motor),
            ("l_motor", self.l_motor),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.k_gear.is_nan() {
            return Err(Error::config("k_gear", "must not be NaN"));
        }
        let positive = [
            ("k1", self.k1),
            ("g1", self.g1),
            ("gr", self.gr),
            ("k_eq", self.k_eq),
            ("k_sea", self.k_sea),
            ("k_gear", self.k_gear),
            ("j_gear", self.j_gear),
            ("j_load", self.j_load),
            ("r_motor", self.r_motor),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::config(name, format!("must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("b_gear", self.b_gear),
            ("l_motor", self.l_motor),
            ("k_t", self.k_t),
            ("k_e", self.k_e),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::config(name, format!("must be >= 0, got {v}")));
            }
        }
        let series = 1.0 / (1.0 / self.k_sea + 1.0 / self.k_gear);
        if ((series - self.k_eq) / self.k_eq).abs() > 1e-9 {
            return Err(Error::config(
                "k_eq",
                format!(
                    "1/k_eq must equal 1/k_sea + 1/k_gear (series combination is {series})"
                ),
            ));
        }
        Ok(())
    }
}

/// True state of the joint at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub t: f64,
    /// Gearbox output angle θ_G (deg). Not observable by any sensor.
    pub theta_g: f64,
    pub omega_g: f64,
    pub theta_l: f64,
    pub omega_l: f64,
    pub i_m: f64,
    pub v_m: f64,
}

/// Time derivatives of the integrated plant states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantDerivative {
    pub theta_g: f64,
    pub omega_g: f64,
    pub theta_l: f64,
    pub omega_l: f64,
    pub i_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    OpenLoopCurrent,
    OpenLoopVoltage,
}

/// Open-loop sinusoidal drive: `offset + amplitude·sin(2π·frequency·t)`,
/// in amperes or volts depending on `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    pub kind: ExcitationKind,
    pub amplitude: f64,
    pub frequency: f64,
    pub offset: f64,
}

impl Excitation {
    pub fn value(&self, t: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        self.offset + self.amplitude * (w * t).sin()
    }

    pub fn rate(&self, t: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        self.amplitude * w * (w * t).cos()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("frequency", self.frequency),
            ("offset", self.offset),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if self.amplitude < 0.0 {
            return Err(Error::config("amplitude", "must be >= 0"));
        }
        if self.frequency < 0.0 {
            return Err(Error::config("frequency", "must be >= 0"));
        }
        Ok(())
    }
}

/// Torque in the spring per the higher-fidelity quadratic characteristic.
/// The true gear ratio is used in both the linear and quadratic term.
pub fn true_spring_torque(params: &JointParams, theta_l: f64, theta_m: f64) -> f64 {
    let deflection = theta_l - theta_m / params.g1;
    params.k1 * deflection + params.k2 * deflection * deflection
}

#[derive(Debug, Clone, Copy)]
enum Drive {
    Voltage(f64),
    Current { i: f64 },
}

type Vector = [f64; 5];

fn pack(s: &PlantState) -> Vector {
    [s.theta_g, s.omega_g, s.theta_l, s.omega_l, s.i_m]
}

fn motor_current(params: &JointParams, y: &Vector, drive: Drive) -> f64 {
    match drive {
        Drive::Current { i } => i,
        // A winding without inductance has no current state.
        Drive::Voltage(v) if params.l_motor == 0.0 => {
            (v - params.k_e * params.g1 * y[1]) / params.r_motor
        }
        Drive::Voltage(_) => y[4],
    }
}

fn rates(params: &JointParams, y: &Vector, drive: Drive) -> Vector {
    let [theta_g, omega_g, theta_l, omega_l, _] = *y;
    let i = motor_current(params, y, drive);
    let theta_m = params.g1 * theta_g;
    let omega_m = params.g1 * omega_g;
    let tau = true_spring_torque(params, theta_l, theta_m);

    let motor_torque = params.k_t * params.g1 * i;
    let alpha_g = (motor_torque - params.b_gear * omega_g + tau) / params.j_gear;
    let alpha_l = -tau / params.j_load;
    let di = match drive {
        Drive::Voltage(v) if params.l_motor > 0.0 => {
            (v - i * params.r_motor - params.k_e * omega_m) / params.l_motor
        }
        _ => 0.0,
    };
    [omega_g, alpha_g, omega_l, alpha_l, di]
}

/// Time derivatives of the plant under an applied motor voltage.
///
/// With `l_motor == 0` the current is algebraic and its reported rate is 0.
pub fn plant_derivatives(
    params: &JointParams,
    state: &PlantState,
    v_applied: f64,
) -> Result<PlantDerivative> {
    let y = pack(state);
    if !y.iter().all(|v| v.is_finite()) || !v_applied.is_finite() {
        return Err(Error::Integration {
            t: state.t,
            quantity: "input state",
        });
    }
    let d = rates(params, &y, Drive::Voltage(v_applied));
    Ok(PlantDerivative {
        theta_g: d[0],
        omega_g: d[1],
        theta_l: d[2],
        omega_l: d[3],
        i_m: d[4],
    })
}

fn drive_at(excitation: &Excitation, t: f64) -> Drive {
    match excitation.kind {
        ExcitationKind::OpenLoopVoltage => Drive::Voltage(excitation.value(t)),
        ExcitationKind::OpenLoopCurrent => Drive::Current {
            i: excitation.value(t),
        },
    }
}

/// Fills in `i_m` and `v_m` so they are consistent with the drive at `state.t`.
fn settle_electrical(params: &JointParams, state: &mut PlantState, excitation: &Excitation) {
    let omega_m = params.g1 * state.omega_g;
    match excitation.kind {
        ExcitationKind::OpenLoopVoltage => {
            state.v_m = excitation.value(state.t);
            if params.l_motor == 0.0 {
                state.i_m = (state.v_m - params.k_e * omega_m) / params.r_motor;
            }
        }
        ExcitationKind::OpenLoopCurrent => {
            state.i_m = excitation.value(state.t);
            state.v_m = state.i_m * params.r_motor
                + params.l_motor * excitation.rate(state.t)
                + params.k_e * omega_m;
        }
    }
}

impl PlantState {
    /// Joint at rest at t = 0 with the electrical quantities matching the drive.
    pub fn at_rest(params: &JointParams, excitation: &Excitation) -> Self {
        let mut s = PlantState::default();
        settle_electrical(params, &mut s, excitation);
        s
    }

    /// True spring torque for this state.
    pub fn spring_torque(&self, params: &JointParams) -> f64 {
        true_spring_torque(params, self.theta_l, params.g1 * self.theta_g)
    }

    fn check_finite(&self) -> Result<()> {
        let fields = [
            ("theta_g", self.theta_g),
            ("omega_g", self.omega_g),
            ("theta_l", self.theta_l),
            ("omega_l", self.omega_l),
            ("i_m", self.i_m),
            ("v_m", self.v_m),
        ];
        match fields.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(Error::Integration {
                t: self.t,
                quantity: name,
            }),
            None => Ok(()),
        }
    }
}

/// Advances the plant by one classical RK4 step of length `dt`.
pub fn step(
    params: &JointParams,
    state: &PlantState,
    excitation: &Excitation,
    dt: f64,
) -> Result<PlantState> {
    state.check_finite()?;
    let t = state.t;
    let y = pack(state);
    let half = 0.5 * dt;
    let add = |a: &Vector, k: &Vector, h: f64| -> Vector {
        let mut out = *a;
        for (o, d) in out.iter_mut().zip(k) {
            *o += h * d;
        }
        out
    };

    let k1 = rates(params, &y, drive_at(excitation, t));
    let k2 = rates(params, &add(&y, &k1, half), drive_at(excitation, t + half));
    let k3 = rates(params, &add(&y, &k2, half), drive_at(excitation, t + half));
    let k4 = rates(params, &add(&y, &k3, dt), drive_at(excitation, t + dt));

    let mut next = y;
    for i in 0..5 {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    let mut out = PlantState {
        t: t + dt,
        theta_g: next[0],
        omega_g: next[1],
        theta_l: next[2],
        omega_l: next[3],
        i_m: next[4],
        v_m: state.v_m,
    };
    settle_electrical(params, &mut out, excitation);
    out.check_finite()?;
    Ok(out)
}
