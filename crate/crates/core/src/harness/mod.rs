//! Scenario configuration, run orchestration and output.

mod export;
mod run;
mod scenario;

pub use export::{
    export_csv, REPORT_FILE, RESIDUALS_FILE, RESIDUALS_HEADER, TELEMETRY_FILE, TELEMETRY_HEADER,
};
pub use run::{run, run_batch, RunOutput};
pub use scenario::{
    load_scenario, save_scenario, Scenario, BIAS_ONSET, DEFAULT_TORQUE_BIAS,
    STUCK_EXCITATION_AMPLITUDE, STUCK_ONSET,
};

/// Environment variable naming the default output directory of the CLI.
pub const OUT_DIR_ENV: &str = "SEA_DIAG_OUT";
