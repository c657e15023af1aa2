//! CSV and JSON output of a run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::RunOutput;
use super::scenario::Scenario;
use crate::detector::{DiagnosticReport, Thresholds};
use crate::error::{Error, Result};

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const REPORT_FILE: &str = "report.json";

pub const TELEMETRY_HEADER: [&str; 7] = ["t", "theta_m", "omega_m", "i_m", "v_m", "theta_l", "tau_sea"];
pub const RESIDUALS_HEADER: [&str; 7] = [
    "t",
    "torsional_raw",
    "torsional_filt",
    "dynamics_raw",
    "dynamics_filt",
    "electrical_raw",
    "electrical_filt",
];

/// 13 significant digits in scientific notation.
fn num(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    label: &'a str,
    seed: u64,
    thresholds: &'a Thresholds,
    #[serde(flatten)]
    report: &'a DiagnosticReport,
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<()> {
    let out_err = |e: csv::Error| Error::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(out_err)?;
    w.write_record(header).map_err(out_err)?;
    for row in rows {
        w.write_record(row.map(num)).map_err(out_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `telemetry.csv`, `residuals.csv` and `report.json` into `dir`,
/// creating it if needed. Returns the written paths.
pub fn export_csv(scenario: &Scenario, output: &RunOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let telemetry = dir.join(TELEMETRY_FILE);
    write_csv(
        &telemetry,
        TELEMETRY_HEADER,
        output
            .telemetry
            .iter()
            .map(|f| [f.t, f.theta_m, f.omega_m, f.i_m, f.v_m, f.theta_l, f.tau_sea]),
    )?;

    let residuals = dir.join(RESIDUALS_FILE);
    write_csv(
        &residuals,
        RESIDUALS_HEADER,
        output.residuals.iter().map(|r| {
            [
                r.t,
                r.raw.torsional,
                r.filtered.torsional,
                r.raw.dynamics,
                r.filtered.dynamics,
                r.raw.electrical,
                r.filtered.electrical,
            ]
        }),
    )?;

    let report = dir.join(REPORT_FILE);
    let doc = ReportDocument {
        label: &scenario.label,
        seed: scenario.seed,
        thresholds: &scenario.thresholds,
        report: &output.report,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Output {
        path: report.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&report, text).map_err(|e| Error::io(&report, e))?;

    Ok(vec![telemetry, residuals, report])
}
