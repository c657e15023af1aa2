use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sea_diag::detector::tune_thresholds;
use sea_diag::harness::{self, export_csv, load_scenario, run_batch, OUT_DIR_ENV};
use sea_diag::{Constraint, Verdict};

const EXIT_NOMINAL: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_FAULT: u8 = 2;

#[derive(Parser)]
#[command(name = "sea-diag", version, about = "Series elastic joint simulator with sensor diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and evaluate the fault detector.
    ///
    /// Exits 0 for a nominal verdict, 2 when a fault is detected, 1 on error.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for telemetry.csv, residuals.csv and report.json.
        /// Defaults to $SEA_DIAG_OUT when set; otherwise nothing is written.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// key=value, e.g. `excitation.amplitude=12` or `faults.0.onset=4`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Tune thresholds from fault-free scenarios.
    Tune {
        #[arg(long, num_args = 1.., required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        factor: f64,
        /// Seeds per scenario, counting up from the scenario's own seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn execute(command: Command) -> Result<u8, Box<dyn std::error::Error>> {
    match command {
        Command::Run {
            scenario,
            out,
            seed,
            overrides,
        } => {
            let mut sc = load_scenario(&scenario, &overrides)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let output = harness::run(&sc)?;
            let out = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
            if let Some(dir) = out {
                for p in export_csv(&sc, &output, &dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            let report = &output.report;
            println!("scenario: {} (seed {})", sc.label, sc.seed);
            for c in Constraint::ALL {
                let r = report.get(c);
                let crossing = r
                    .first_crossing
                    .map(|t| format!("triggered at {t:.3} s"))
                    .unwrap_or_else(|| "not triggered".into());
                println!(
                    "  {:<10} peak {:>10.4} / eps {:>8.4}  {}",
                    c.name(),
                    r.peak_filtered,
                    sc.thresholds.get(c),
                    crossing
                );
            }
            Ok(match report.verdict {
                Verdict::Nominal => {
                    println!("verdict: nominal");
                    EXIT_NOMINAL
                }
                Verdict::FaultDetected => {
                    println!("verdict: fault-detected");
                    EXIT_FAULT
                }
            })
        }
        Command::Tune {
            scenarios,
            factor,
            seeds,
        } => {
            let mut batch = Vec::new();
            for path in &scenarios {
                let sc = load_scenario(path, &[])?;
                if !sc.faults.is_empty() {
                    return Err(format!("{}: tuning needs fault-free scenarios", path.display()).into());
                }
                for k in 0..seeds.max(1) {
                    let mut s = sc.clone();
                    s.seed = sc.seed.wrapping_add(k);
                    batch.push(s);
                }
            }
            let settling = batch[0].thresholds.settling;
            let runs = run_batch(&batch)
                .into_iter()
                .map(|r| r.map(|o| o.residuals))
                .collect::<Result<Vec<_>, _>>()?;
            let th = tune_thresholds(&runs, factor, settling)?;
            println!("# tuned from {} nominal run(s), safety factor {factor}", runs.len());
            println!("[thresholds]");
            println!("torsional = {}", th.torsional);
            println!("dynamics = {}", th.dynamics);
            println!("electrical = {}", th.electrical);
            println!("settling = {}", th.settling);
            Ok(EXIT_NOMINAL)
        }
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario, &[])?;
            println!("{}: ok ({})", scenario.display(), sc.label);
            Ok(EXIT_NOMINAL)
        }
    }
}
