use rayon::prelude::*;

use super::scenario::Scenario;
use crate::detector::{DiagnosticReport, Detector};
use crate::error::Result;
use crate::plant::{self, PlantState};
use crate::residuals::{ResidualFrame, ResidualGenerator};
use crate::sensors::{FaultInjector, Sensors, TelemetryFrame};

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub telemetry: Vec<TelemetryFrame>,
    pub residuals: Vec<ResidualFrame>,
    pub report: DiagnosticReport,
}

/// Runs the full pipeline: plant → sensors → faults → residuals → low-pass →
/// thresholds. Deterministic in `(scenario, scenario.seed)`.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let params = &scenario.params;
    let fs = scenario.sensor_rate;
    let decimation = scenario.decimation();
    let samples = scenario.sample_count();

    let mut sensors = Sensors::new(&scenario.noise, fs, scenario.seed)?;
    let mut injectors: Vec<FaultInjector> =
        scenario.faults.iter().copied().map(FaultInjector::new).collect();
    let mut residuals = ResidualGenerator::new(params, fs, scenario.cutoff_hz)?;
    let mut detector = Detector::new(scenario.thresholds);

    let mut state = PlantState::at_rest(params, &scenario.excitation);
    let mut telemetry = Vec::with_capacity(samples + 1);
    let mut residual_frames = Vec::with_capacity(samples + 1);
    let mut steps: u64 = 0;

    for k in 0..=samples {
        if k > 0 {
            for _ in 0..decimation {
                state = plant::step(params, &state, &scenario.excitation, scenario.dt)?;
                steps += 1;
                state.t = steps as f64 * scenario.dt;
            }
        }
        let mut frame = sensors.measure(&state, params);
        frame.t = k as f64 / fs;
        for inj in injectors.iter_mut() {
            frame = inj.apply(&frame)?;
        }
        let r = residuals.process(&frame)?;
        detector.push(&r)?;
        telemetry.push(frame);
        residual_frames.push(r);
    }

    Ok(RunOutput {
        telemetry,
        residuals: residual_frames,
        report: detector.report()?,
    })
}

/// Runs independent scenarios in parallel; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<RunOutput>> {
    scenarios.par_iter().map(run).collect()
}
