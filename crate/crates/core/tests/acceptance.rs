//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line to
//! stdout; the test fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sea_diag::dsp::LowPass2;
use sea_diag::harness::{export_csv, load_scenario, run, Scenario};
use sea_diag::plant::{self, PlantState};
use sea_diag::residuals::{dynamics_residual, make_dynamics_filters};
use sea_diag::sensors::TelemetryFrame;
use sea_diag::{Channel, FaultKind, FaultSpec, JointParams, NoiseSpec, Verdict};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac1_nominal_quiet() -> Outcome {
    let base = load_scenario(bundled("nominal.scenario"), &[]).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    let mut slowest = 0.0_f64;
    for seed in 1..=20 {
        let mut sc = base.clone();
        sc.seed = seed;
        let start = Instant::now();
        let out = run(&sc).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        if out.report.verdict != Verdict::Nominal {
            return Err(format!("seed {seed}: verdict {:?}", out.report.verdict));
        }
        let peak = out
            .residuals
            .iter()
            .filter(|r| r.t >= sc.thresholds.settling)
            .map(|r| r.filtered.torsional)
            .fold(0.0, f64::max);
        worst = worst.max(peak);
    }
    check(
        worst < 12.0 && slowest < 5.0,
        format!("20 seeds nominal, max filtered torsional {worst:.3} Nm (< 12), slowest run {slowest:.3} s (< 5)"),
    )
}

fn ac2_bias_detected() -> Outcome {
    let base = load_scenario(bundled("bias.scenario"), &[]).map_err(|e| e.to_string())?;
    let onset = base.faults[0].onset;
    let mut earliest = f64::INFINITY;
    let mut latest = 0.0_f64;
    for seed in 1..=20 {
        let mut sc = base.clone();
        sc.seed = seed;
        let out = run(&sc).map_err(|e| e.to_string())?;
        let t = out.report.torsional.first_crossing.ok_or(format!("seed {seed}: torsional never triggered"))?;
        let early = out
            .residuals
            .iter()
            .any(|r| r.t >= sc.thresholds.settling && r.t < onset && r.filtered.torsional > sc.thresholds.torsional);
        if early {
            return Err(format!("seed {seed}: crossing before onset"));
        }
        earliest = earliest.min(t);
        latest = latest.max(t);
    }
    check(
        earliest > 5.0 && latest < 6.0,
        format!("+20 Nm torque bias at 5 s, torsional first crossing in [{earliest:.3}, {latest:.3}] s over 20 seeds (within (5, 6))"),
    )
}

fn ac3_stuck_detected() -> Outcome {
    let sc = load_scenario(bundled("stuck.scenario"), &[]).map_err(|e| e.to_string())?;
    let onset = sc.faults[0].onset;
    let out = run(&sc).map_err(|e| e.to_string())?;

    let mut truth = sc.clone();
    truth.faults.clear();
    truth.noise = NoiseSpec::silent();
    let clean = run(&truth).map_err(|e| e.to_string())?;
    let frozen = out
        .telemetry
        .iter()
        .find(|f| f.t >= onset)
        .map(|f| f.tau_sea)
        .ok_or("no samples after onset")?;
    let departure = clean
        .telemetry
        .iter()
        .filter(|f| f.t >= onset)
        .map(|f| (f.tau_sea - frozen).abs())
        .fold(0.0, f64::max);
    if departure <= 32.0 {
        return Err(format!("precondition: spring torque departs only {departure:.2} Nm from the frozen reading"));
    }
    let t = out.report.torsional.first_crossing.ok_or("torsional never triggered")?;
    check(
        t > onset,
        format!("spring torque stuck at 3.1 s (departure {departure:.1} Nm > 32), torsional first crossing {t:.3} s"),
    )
}

fn ac4_matched_nullity() -> Outcome {
    let mut sc = Scenario::nominal();
    sc.params = sc.params.matched();
    sc.noise = NoiseSpec::silent();
    sc.sensor_rate = 20_000.0;
    sc.dt = 0.05e-3;
    let out = run(&sc).map_err(|e| e.to_string())?;
    let peak_tau = out.telemetry.iter().map(|f| f.tau_sea.abs()).fold(0.0, f64::max);
    let peak_v = out.telemetry.iter().map(|f| f.v_m.abs()).fold(0.0, f64::max);
    let post = || out.residuals.iter().filter(|r| r.t >= sc.thresholds.settling);
    let tors = post().map(|r| r.raw.torsional).fold(0.0, f64::max) / peak_tau;
    let dynm = post().map(|r| r.raw.dynamics).fold(0.0, f64::max) / peak_tau;
    let elec = post().map(|r| r.raw.electrical).fold(0.0, f64::max) / peak_v;
    check(
        tors < 1e-6 && dynm < 1e-6 && elec < 1e-6,
        format!("matched model at 20 kHz, relative raw residuals torsional {tors:.1e}, dynamics {dynm:.1e}, electrical {elec:.1e} (< 1e-6)"),
    )
}

/// Linear joint with rigid gear ratio and a free load inertia, driven by a
/// prescribed motor current, integrated independently of the plant module.
fn linear_joint_telemetry(p: &JointParams, current: impl Fn(f64) -> f64, duration: f64, fs: f64) -> Vec<TelemetryFrame> {
    let k = p.k_sea;
    let f = |t: f64, y: [f64; 4]| {
        let [tg, wg, tl, wl] = y;
        let tau_l = k * (tg - tl);
        [
            wg,
            (p.k_t * p.gr * current(t) - p.b_gear * wg - tau_l) / p.j_gear,
            wl,
            tau_l / p.j_load,
        ]
    };
    let substeps = 20;
    let h = 1.0 / (fs * substeps as f64);
    let n = (duration * fs).round() as usize;
    let mut y = [0.0; 4];
    let mut out = Vec::with_capacity(n + 1);
    for s in 0..=n {
        let t = s as f64 / fs;
        out.push(TelemetryFrame {
            t,
            theta_m: p.gr * y[0],
            omega_m: p.gr * y[1],
            i_m: current(t),
            v_m: 0.0,
            theta_l: y[2],
            tau_sea: k * (y[2] - y[0]),
        });
        for j in 0..substeps {
            let t0 = t + j as f64 * h;
            let add = |a: [f64; 4], b: [f64; 4], c: f64| std::array::from_fn::<f64, 4, _>(|i| a[i] + c * b[i]);
            let k1 = f(t0, y);
            let k2 = f(t0 + h / 2.0, add(y, k1, h / 2.0));
            let k3 = f(t0 + h / 2.0, add(y, k2, h / 2.0));
            let k4 = f(t0 + h, add(y, k3, h));
            y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
    }
    out
}

fn ac5_linear_oracle() -> Outcome {
    let p = JointParams::defaults();
    let fs = 1000.0;
    let current = |t: f64| {
        let ramp = (t / 0.05).min(1.0);
        ramp * (2.0 * (2.0 * PI * 1.0 * t).sin() + 0.5 * (2.0 * PI * 3.7 * t).sin())
    };
    let frames = linear_joint_telemetry(&p, current, 10.0, fs);
    let (mut fwd, mut back) = make_dynamics_filters(&p, fs).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    let mut peak = 0.0_f64;
    for f in &frames {
        let r = dynamics_residual(f, &mut fwd, &mut back, fs).map_err(|e| e.to_string())?;
        peak = peak.max(f.tau_sea.abs());
        if f.t >= 0.2 {
            worst = worst.max(r);
        }
    }
    let rel = worst / peak;
    check(
        rel < 0.01,
        format!("independent linear joint at 1 kHz, max dynamics residual {worst:.3e} Nm = {:.3}% of peak torque {peak:.2} Nm (< 1%)", 100.0 * rel),
    )
}

/// Continuous 2nd-order Butterworth response to an input that ramps from 0 to
/// 1 over `[-T, 0]`, which is what the discrete filter sees when fed samples
/// `0, 1, 1, ...`.
fn butterworth_ramp_step(wn: f64, t_sample: f64, t: f64) -> f64 {
    let zeta = std::f64::consts::FRAC_1_SQRT_2;
    let sigma = zeta * wn;
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    // Integral of the unit step response from 0 to t.
    let integral = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let e = (-sigma * t).exp();
        t - 2.0 * zeta / wn + e * ((2.0 * zeta / wn) * (wd * t).cos() + ((2.0 * zeta * zeta - 1.0) / wd) * (wd * t).sin())
    };
    (integral(t + t_sample) - integral(t)) / t_sample
}

fn ac6_lowpass() -> Outcome {
    let fs = 1000.0;
    let mut lp = LowPass2::new(5.0, fs).map_err(|e| e.to_string())?;
    let tf = lp.transfer_function().clone();
    let dc = tf.dc_gain();
    let atten = -20.0 * tf.magnitude(25.0).log10();
    let wn = 2.0 * PI * 5.0;
    let mut worst = 0.0_f64;
    for n in 0..2000 {
        let y = lp.step(1.0);
        let t = n as f64 / fs;
        worst = worst.max((y - butterworth_ramp_step(wn, 1.0 / fs, t)).abs());
    }
    check(
        (dc - 1.0).abs() < 1e-9 && atten >= 26.0 && worst < 0.005,
        format!("5 Hz low-pass at 1 kHz, DC gain {dc:.12}, {atten:.2} dB at 25 Hz (>= 26), step error {:.4}% (< 0.5%)", 100.0 * worst),
    )
}

fn ac7_isolation() -> Outcome {
    let bias = load_scenario(bundled("bias.scenario"), &[]).map_err(|e| e.to_string())?;
    let stuck = load_scenario(bundled("stuck.scenario"), &[]).map_err(|e| e.to_string())?;
    let mut batch = Vec::new();
    for seed in 1..=100 {
        for base in [&bias, &stuck] {
            let mut sc = base.clone();
            sc.seed = seed;
            batch.push(sc);
        }
    }
    for (sc, out) in batch.iter().zip(sea_diag::harness::run_batch(&batch)) {
        let out = out.map_err(|e| e.to_string())?;
        if out.report.electrical.triggered {
            return Err(format!("{} seed {}: electrical triggered by a torque fault", sc.label, sc.seed));
        }
    }

    let mut speed = Scenario::nominal();
    speed.label = "speed-bias".into();
    speed.faults = vec![FaultSpec {
        channel: Channel::OmegaM,
        kind: FaultKind::Bias,
        onset: 5.0,
        bias_magnitude: 1000.0,
    }];
    let out = run(&speed).map_err(|e| e.to_string())?;
    let r = &out.report;
    check(
        r.electrical.triggered && !r.torsional.triggered,
        format!(
            "200 torque-fault runs never trip electrical; 1000 deg/s speed bias trips electrical ({}) and torsional ({})",
            r.electrical.triggered, r.torsional.triggered
        ),
    )
}

fn load_angle_trajectory(dt: f64) -> Result<Vec<f64>, String> {
    let sc = Scenario::nominal();
    let steps = (sc.duration / dt).round() as usize;
    let every = (1e-3 / dt).round() as usize;
    let mut state = PlantState::at_rest(&sc.params, &sc.excitation);
    let mut out = Vec::new();
    for k in 1..=steps {
        state = plant::step(&sc.params, &state, &sc.excitation, dt).map_err(|e| e.to_string())?;
        state.t = k as f64 * dt;
        if k % every == 0 {
            out.push(state.theta_l);
        }
    }
    Ok(out)
}

fn ac8_integrator_order() -> Outcome {
    let dt = 0.5e-3;
    let reference = load_angle_trajectory(dt / 8.0)?;
    let coarse = load_angle_trajectory(dt)?;
    let fine = load_angle_trajectory(dt / 2.0)?;
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let e1 = max_diff(&coarse, &reference);
    let e2 = max_diff(&fine, &reference);
    let order = (e1 / e2).log2();
    let halving = max_diff(&coarse, &fine);
    check(
        order >= 3.5 && halving < 1e-6,
        format!("load angle error ratio on halving dt gives order {order:.2} (>= 3.5), change {halving:.2e} deg (< 1e-6)"),
    )
}

fn ac9_determinism() -> Outcome {
    let sc = load_scenario(bundled("bias.scenario"), &[]).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = run(&sc).map_err(|e| e.to_string())?;
        files.push(export_csv(&sc, &out, dir.path().join(name)).map_err(|e| e.to_string())?);
    }
    for (a, b) in files[0].iter().zip(&files[1]) {
        let (x, y) = (std::fs::read(a).map_err(|e| e.to_string())?, std::fs::read(b).map_err(|e| e.to_string())?);
        if x != y {
            return Err(format!("{} differs between runs", a.file_name().unwrap().to_string_lossy()));
        }
    }
    check(true, format!("{} output files byte-identical across two runs with the same seed", files[0].len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("AC1 nominal runs stay quiet", ac1_nominal_quiet),
        ("AC2 torque bias detected", ac2_bias_detected),
        ("AC3 stuck torque sensor detected", ac3_stuck_detected),
        ("AC4 matched model nulls residuals", ac4_matched_nullity),
        ("AC5 dynamics filters match linear joint", ac5_linear_oracle),
        ("AC6 residual low-pass response", ac6_lowpass),
        ("AC7 fault isolation", ac7_isolation),
        ("AC8 RK4 convergence order", ac8_integrator_order),
        ("AC9 deterministic output", ac9_determinism),
    ];
    let mut stdout = std::io::stdout();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(name);
                ("FAIL", d)
            }
        };
        writeln!(stdout, "{tag} {name}: {detail}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
