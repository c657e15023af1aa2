//! Threshold decision stage: latching per-constraint fault flags over the
//! filtered residual stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::residuals::{Constraint, PerConstraint, ResidualFrame};

/// Per-constraint violation thresholds and the startup exclusion window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Nm
    pub torsional: f64,
    /// Nm
    pub dynamics: f64,
    /// V
    pub electrical: f64,
    /// Samples with `t < settling` are never evaluated (s).
    pub settling: f64,
}

impl Thresholds {
    pub fn get(&self, c: Constraint) -> f64 {
        match c {
            Constraint::Torsional => self.torsional,
            Constraint::Dynamics => self.dynamics,
            Constraint::Electrical => self.electrical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Constraint::ALL {
            let e = self.get(c);
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::config(c.name(), "threshold must be finite and > 0"));
            }
        }
        if !(self.settling.is_finite() && self.settling >= 0.0) {
            return Err(Error::config("settling", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub triggered: bool,
    pub first_crossing: Option<f64>,
    /// Largest filtered residual after the settling window.
    pub peak_filtered: f64,
    /// Largest filtered residual before any crossing, divided by the threshold.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Nominal,
    FaultDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub torsional: ConstraintReport,
    pub dynamics: ConstraintReport,
    pub electrical: ConstraintReport,
    pub verdict: Verdict,
}

impl DiagnosticReport {
    pub fn get(&self, c: Constraint) -> &ConstraintReport {
        match c {
            Constraint::Torsional => &self.torsional,
            Constraint::Dynamics => &self.dynamics,
            Constraint::Electrical => &self.electrical,
        }
    }

    pub fn triggered(&self) -> Vec<Constraint> {
        Constraint::ALL
            .into_iter()
            .filter(|c| self.get(*c).triggered)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Track {
    first_crossing: Option<f64>,
    peak: f64,
    pre_crossing_peak: f64,
}

/// Streaming form of [`evaluate`]; feed frames in time order.
#[derive(Debug, Clone)]
pub struct Detector {
    thresholds: Thresholds,
    tracks: [Track; 3],
    seen: usize,
}

impl Detector {
    pub fn new(thresholds: Thresholds) -> Self {
        Detector {
            thresholds,
            tracks: [Track::default(); 3],
            seen: 0,
        }
    }

    pub fn push(&mut self, frame: &ResidualFrame) -> Result<()> {
        self.seen += 1;
        if frame.t < self.thresholds.settling {
            return Ok(());
        }
        for (c, track) in Constraint::ALL.iter().zip(self.tracks.iter_mut()) {
            let x = frame.filtered.get(*c);
            if !x.is_finite() {
                return Err(Error::NonFiniteResidual {
                    constraint: c.name(),
                    t: frame.t,
                });
            }
            track.peak = track.peak.max(x);
            if track.first_crossing.is_some() {
                continue;
            }
            if x > self.thresholds.get(*c) {
                track.first_crossing = Some(frame.t);
            } else {
                track.pre_crossing_peak = track.pre_crossing_peak.max(x);
            }
        }
        Ok(())
    }

    /// Any constraint has latched.
    pub fn tripped(&self) -> bool {
        self.tracks.iter().any(|t| t.first_crossing.is_some())
    }

    pub fn report(&self) -> Result<DiagnosticReport> {
        if self.seen == 0 {
            return Err(Error::EmptyStream);
        }
        let make = |c: Constraint| {
            let t = &self.tracks[c as usize];
            ConstraintReport {
                triggered: t.first_crossing.is_some(),
                first_crossing: t.first_crossing,
                peak_filtered: t.peak,
                margin: t.pre_crossing_peak / self.thresholds.get(c),
            }
        };
        let verdict = if self.tripped() {
            Verdict::FaultDetected
        } else {
            Verdict::Nominal
        };
        Ok(DiagnosticReport {
            torsional: make(Constraint::Torsional),
            dynamics: make(Constraint::Dynamics),
            electrical: make(Constraint::Electrical),
            verdict,
        })
    }
}

/// A constraint triggers at the first `t >= settling` whose filtered residual
/// strictly exceeds its threshold; the flag then latches.
pub fn evaluate(frames: &[ResidualFrame], thresholds: &Thresholds) -> Result<DiagnosticReport> {
    let mut det = Detector::new(*thresholds);
    for f in frames {
        det.push(f)?;
    }
    det.report()
}

/// `ε_c = safety_factor · max` of the post-settling filtered residual of
/// constraint `c` over all nominal runs.
pub fn tune_thresholds(
    runs: &[Vec<ResidualFrame>],
    safety_factor: f64,
    settling: f64,
) -> Result<Thresholds> {
    if !(safety_factor.is_finite() && safety_factor > 0.0) {
        return Err(Error::config("factor", "safety factor must be finite and > 0"));
    }
    if runs.is_empty() || runs.iter().all(|r| r.is_empty()) {
        return Err(Error::EmptyStream);
    }
    let mut max = PerConstraint::default();
    let mut any = false;
    for frame in runs.iter().flatten() {
        for c in Constraint::ALL {
            let x = frame.filtered.get(c);
            if !x.is_finite() {
                return Err(Error::NonFiniteResidual {
                    constraint: c.name(),
                    t: frame.t,
                });
            }
            if frame.t >= settling {
                let m = max.get_mut(c);
                *m = m.max(x);
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::EmptyStream);
    }
    let th = Thresholds {
        torsional: safety_factor * max.torsional,
        dynamics: safety_factor * max.dynamics,
        electrical: safety_factor * max.electrical,
        settling,
    };
    th.validate()?;
    Ok(th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frames(values: &[(f64, f64)]) -> Vec<ResidualFrame> {
        values
            .iter()
            .map(|&(t, x)| ResidualFrame {
                t,
                raw: PerConstraint::default(),
                filtered: PerConstraint {
                    torsional: x,
                    dynamics: 0.1,
                    electrical: 0.01,
                },
            })
            .collect()
    }

    fn thresholds() -> Thresholds {
        Thresholds {
            torsional: 12.0,
            dynamics: 1.0,
            electrical: 1.0,
            settling: 0.2,
        }
    }

    #[test]
    fn quiet_stream_is_nominal() {
        let f = frames(&[(0.0, 0.0), (1.0, 11.9), (2.0, 12.0)]);
        let r = evaluate(&f, &thresholds()).unwrap();
        assert_eq!(r.verdict, Verdict::Nominal);
        assert!(r.triggered().is_empty());
        assert_eq!(r.torsional.first_crossing, None);
        assert!((r.torsional.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_strict_crossing_is_reported() {
        let f = frames(&[(5.0, 3.0), (5.3, 12.0), (5.4, 13.0), (5.5, 2.0)]);
        let r = evaluate(&f, &thresholds()).unwrap();
        assert_eq!(r.verdict, Verdict::FaultDetected);
        assert_eq!(r.torsional.first_crossing, Some(5.4));
        assert_eq!(r.torsional.peak_filtered, 13.0);
        assert_eq!(r.triggered(), vec![Constraint::Torsional]);
    }

    #[test]
    fn settling_window_is_ignored() {
        let f = frames(&[(0.0, 50.0), (0.1, 50.0), (0.2, 1.0), (1.0, 1.0)]);
        let r = evaluate(&f, &thresholds()).unwrap();
        assert_eq!(r.verdict, Verdict::Nominal);
        assert_eq!(r.torsional.peak_filtered, 1.0);
    }

    #[test]
    fn empty_stream_errors() {
        assert!(matches!(evaluate(&[], &thresholds()), Err(Error::EmptyStream)));
    }

    #[test]
    fn tuning_arithmetic() {
        let run = frames(&[(0.0, 100.0), (1.0, 4.0), (2.0, 2.0)]);
        let th = tune_thresholds(std::slice::from_ref(&run), 3.0, 0.2).unwrap();
        assert!((th.torsional - 12.0).abs() < 1e-12);
        assert!((th.dynamics - 0.3).abs() < 1e-12);
        let th = tune_thresholds(&[run], 1.0, 0.2).unwrap();
        assert_eq!(th.torsional, 4.0);
    }

    #[test]
    fn tuning_rejects_non_finite() {
        let run = frames(&[(1.0, f64::NAN)]);
        assert!(matches!(
            tune_thresholds(&[run], 3.0, 0.2),
            Err(Error::NonFiniteResidual { .. })
        ));
        assert!(tune_thresholds(&[], 3.0, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn raising_threshold_never_triggers_earlier(
            xs in prop::collection::vec(0.0f64..30.0, 1..300),
            eps in 0.5f64..25.0,
            bump in 0.0f64..10.0,
        ) {
            let f: Vec<_> = xs.iter().enumerate().map(|(k, x)| (k as f64 * 0.01, *x)).collect();
            let f = frames(&f);
            let lo = Thresholds { torsional: eps, ..thresholds() };
            let hi = Thresholds { torsional: eps + bump, ..thresholds() };
            let a = evaluate(&f, &lo).unwrap().torsional;
            let b = evaluate(&f, &hi).unwrap().torsional;
            if b.triggered {
                prop_assert!(a.triggered);
                prop_assert!(a.first_crossing.unwrap() <= b.first_crossing.unwrap());
            }
            if let Some(t) = a.first_crossing {
                prop_assert!(t >= lo.settling);
            }
        }

        #[test]
        fn verdict_latches(
            xs in prop::collection::vec(0.0f64..30.0, 1..200),
            tail in prop::collection::vec(0.0f64..30.0, 0..200),
        ) {
            let head: Vec<_> = xs.iter().enumerate().map(|(k, x)| (0.2 + k as f64 * 0.01, *x)).collect();
            let full: Vec<_> = head.iter().copied().chain(
                tail.iter().enumerate().map(|(k, x)| (10.0 + k as f64 * 0.01, *x))
            ).collect();
            let a = evaluate(&frames(&head), &thresholds()).unwrap();
            let b = evaluate(&frames(&full), &thresholds()).unwrap();
            if a.verdict == Verdict::FaultDetected {
                prop_assert_eq!(b.verdict, Verdict::FaultDetected);
                prop_assert_eq!(a.torsional.first_crossing, b.torsional.first_crossing);
            }
        }
    }
}
