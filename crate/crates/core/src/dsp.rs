//! Streaming filters and noise sources.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Second-order-section transfer function in z⁻¹, realized in transposed
/// direct form II.
///
/// `b` and `a` hold `[c0, c1, c2]` for `c0 + c1·z⁻¹ + c2·z⁻²`; `a[0]` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTF {
    pub b: [f64; 3],
    pub a: [f64; 3],
    state: [f64; 2],
    pub fs: f64,
}

impl DiscreteTF {
    /// Normalizes by `a[0]` and rejects poles on or outside the unit circle.
    pub fn new(b: [f64; 3], a: [f64; 3], fs: f64, name: &'static str) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config("fs", "sample rate must be positive"));
        }
        let a0 = a[0];
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::UnstableFilter { name });
        }
        let b = b.map(|c| c / a0);
        let a = a.map(|c| c / a0);
        if !b.iter().chain(&a).all(|c| c.is_finite()) {
            return Err(Error::UnstableFilter { name });
        }
        // Jury conditions for z² + a1·z + a2
        if !(a[2].abs() < 1.0 && a[1].abs() < 1.0 + a[2]) {
            return Err(Error::UnstableFilter { name });
        }
        Ok(DiscreteTF {
            b,
            a,
            state: [0.0; 2],
            fs,
        })
    }

    /// Tustin discretization of `(n2·s² + n1·s + n0) / (d2·s² + d1·s + d0)`
    /// at sample rate `fs`, without frequency prewarping.
    pub fn bilinear(num: [f64; 3], den: [f64; 3], fs: f64, name: &'static str) -> Result<Self> {
        Self::bilinear_with_constant(num, den, 2.0 * fs, fs, name)
    }

    /// Tustin map `s → c·(1 − z⁻¹)/(1 + z⁻¹)` with an explicit constant `c`.
    fn bilinear_with_constant(
        num: [f64; 3],
        den: [f64; 3],
        c: f64,
        fs: f64,
        name: &'static str,
    ) -> Result<Self> {
        if num[0] == 0.0 && den[0] == 0.0 {
            // first order: clearing (1 + z⁻¹) once avoids a cancelled pole at z = −1
            let map = |p: [f64; 3]| [p[1] * c + p[2], -p[1] * c + p[2], 0.0];
            return Self::new(map(num), map(den), fs, name);
        }
        let map = |p: [f64; 3]| {
            let [p2, p1, p0] = p;
            let c2 = c * c;
            [
                p2 * c2 + p1 * c + p0,
                -2.0 * p2 * c2 + 2.0 * p0,
                p2 * c2 - p1 * c + p0,
            ]
        };
        Self::new(map(num), map(den), fs, name)
    }

    /// Pushes one sample through the filter.
    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.state[0];
        self.state[0] = self.b[1] * x - self.a[1] * y + self.state[1];
        self.state[1] = self.b[2] * x - self.a[2] * y;
        y
    }

    pub fn reset(&mut self) {
        self.state = [0.0; 2];
    }

    /// Gain at z = 1.
    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Magnitude of the frequency response at `freq` Hz.
    pub fn magnitude(&self, freq: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / self.fs;
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
            (re * re + im * im).sqrt()
        };
        eval(&self.b) / eval(&self.a)
    }

    /// Largest pole modulus.
    pub fn pole_radius(&self) -> f64 {
        let (a1, a2) = (self.a[1], self.a[2]);
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-a1 + r) / 2.0).abs().max(((-a1 - r) / 2.0).abs())
        }
    }
}

/// Second-order Butterworth low-pass (Q = 1/√2), Tustin-discretized with the
/// cutoff prewarped so the −3 dB point lands exactly on `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPass2 {
    pub cutoff: f64,
    tf: DiscreteTF,
}

impl LowPass2 {
    pub fn new(cutoff: f64, fs: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::config("cutoff_hz", "must be > 0"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config("fs", "sample rate must be positive"));
        }
        if cutoff >= fs / 2.0 {
            return Err(Error::config(
                "cutoff_hz",
                format!("must be below Nyquist ({} Hz)", fs / 2.0),
            ));
        }
        let c = 2.0 * fs;
        let wc = c * (std::f64::consts::PI * cutoff / fs).tan();
        let tf = DiscreteTF::bilinear_with_constant(
            [0.0, 0.0, wc * wc],
            [1.0, std::f64::consts::SQRT_2 * wc, wc * wc],
            c,
            fs,
            "lowpass",
        )?;
        Ok(LowPass2 { cutoff, tf })
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        self.tf.step(x)
    }

    pub fn reset(&mut self) {
        self.tf.reset()
    }

    pub fn fs(&self) -> f64 {
        self.tf.fs
    }

    pub fn transfer_function(&self) -> &DiscreteTF {
        &self.tf
    }
}

/// Gaussian white noise through a first-order low-pass at `bandwidth`,
/// scaled so the stationary standard deviation equals `std`.
///
/// The recursion is the exact discretization of an Ornstein-Uhlenbeck
/// process: `x[n] = ρ·x[n−1] + √(1−ρ²)·std·w[n]` with `ρ = exp(−2π·bw/fs)`.
/// The first sample is drawn from the stationary distribution.
#[derive(Debug, Clone)]
pub struct BandLimitedNoise {
    std: f64,
    rho: f64,
    drive: f64,
    state: Option<f64>,
    rng: ChaCha8Rng,
}

impl BandLimitedNoise {
    pub fn new(std: f64, bandwidth: f64, fs: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(std.is_finite() && std >= 0.0) {
            return Err(Error::config("std", "must be finite and >= 0"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config("fs", "sample rate must be positive"));
        }
        if !(bandwidth > 0.0 && bandwidth < fs / 2.0) {
            return Err(Error::config(
                "bandwidth",
                format!("must lie in (0, {}) Hz", fs / 2.0),
            ));
        }
        let rho = (-2.0 * std::f64::consts::PI * bandwidth / fs).exp();
        Ok(BandLimitedNoise {
            std,
            rho,
            drive: (1.0 - rho * rho).sqrt(),
            state: None,
            rng,
        })
    }

    pub fn seeded(std: f64, bandwidth: f64, fs: f64, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::new(std, bandwidth, fs, rng)
    }

    /// Lag-one correlation coefficient of the process.
    pub fn correlation_per_sample(&self) -> f64 {
        self.rho
    }

    pub fn next_sample(&mut self) -> f64 {
        let w: f64 = StandardNormal.sample(&mut self.rng);
        let x = match self.state {
            None => w,
            Some(prev) => self.rho * prev + self.drive * w,
        };
        self.state = Some(x);
        self.std * x
    }
}

impl Iterator for BandLimitedNoise {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_sample())
    }
}
