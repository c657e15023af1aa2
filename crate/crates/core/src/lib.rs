//! Series elastic actuator joint simulator with model-based sensor
//! diagnostics.
//!
//! The pipeline for one run is
//!
//! ```text
//! plant (RK4) → sensors (noise, faults) → residuals → low-pass → thresholds
//! ```
//!
//! Three analytical constraints cross-check the six sensor channels:
//! the torsional spring relation between motor angle, load angle and spring
//! torque; the second-order joint dynamics between motor current, load angle
//! and spring torque; and the motor winding equation between voltage,
//! current and motor speed.

pub mod detector;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod plant;
pub mod residuals;
pub mod sensors;

pub use detector::{evaluate, tune_thresholds, DiagnosticReport, Thresholds, Verdict};
pub use error::{Error, Result};
pub use harness::{load_scenario, run, RunOutput, Scenario};
pub use plant::{Excitation, ExcitationKind, JointParams, PlantState};
pub use residuals::{Constraint, ResidualFrame};
pub use sensors::{Channel, FaultKind, FaultSpec, NoiseSpec, TelemetryFrame};
