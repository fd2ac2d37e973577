//! Drive envelopes for readout tones and the optical pump.

use num_complex::Complex64;

use crate::dynamics::DynamicsError;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    Rectangular,
    /// Gaussian edges of length `rise`, flat in between.
    FlatTopGaussian,
    /// Raised-cosine edges of length `rise`, flat in between.
    FlatTopCosine,
    /// Complex samples on a uniform grid starting at `start`, spaced `dt`;
    /// linearly interpolated, zero outside the table.
    Tabulated {
        dt: f64,
        samples: Vec<Complex64>,
    },
}

/// Complex drive envelope in photon-flux amplitude units (√(photons/s)).
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    pub amplitude: Complex64,
    pub start: f64,
    pub duration: f64,
    pub rise: f64,
    /// Detuning of the carrier from the frame frequency, rad/s.
    pub carrier_detuning: f64,
}

/// Gaussian edges are truncated at this many standard deviations.
const GAUSS_EDGE_SIGMAS: f64 = 3.0;

impl PulseEnvelope {
    pub fn new(
        shape: PulseShape,
        amplitude: Complex64,
        start: f64,
        duration: f64,
        rise: f64,
        carrier_detuning: f64,
    ) -> Result<Self, DynamicsError> {
        let p = PulseEnvelope {
            shape,
            amplitude,
            start,
            duration,
            rise,
            carrier_detuning,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rectangular(amplitude: f64, start: f64, duration: f64) -> Result<Self, DynamicsError> {
        Self::new(
            PulseShape::Rectangular,
            amplitude.into(),
            start,
            duration,
            0.0,
            0.0,
        )
    }

    /// A drive switched on at `t = 0` and never switched off.
    pub fn constant(amplitude: Complex64) -> Self {
        PulseEnvelope {
            shape: PulseShape::Rectangular,
            amplitude,
            start: 0.0,
            duration: f64::INFINITY,
            rise: 0.0,
            carrier_detuning: 0.0,
        }
    }

    pub fn flat_top_gaussian(
        amplitude: f64,
        start: f64,
        duration: f64,
        rise: f64,
    ) -> Result<Self, DynamicsError> {
        Self::new(
            PulseShape::FlatTopGaussian,
            amplitude.into(),
            start,
            duration,
            rise,
            0.0,
        )
    }

    pub fn flat_top_cosine(
        amplitude: f64,
        start: f64,
        duration: f64,
        rise: f64,
    ) -> Result<Self, DynamicsError> {
        Self::new(
            PulseShape::FlatTopCosine,
            amplitude.into(),
            start,
            duration,
            rise,
            0.0,
        )
    }

    pub fn tabulated(start: f64, dt: f64, samples: Vec<Complex64>) -> Result<Self, DynamicsError> {
        let duration = dt * samples.len().saturating_sub(1) as f64;
        Self::new(
            PulseShape::Tabulated { dt, samples },
            Complex64::new(1.0, 0.0),
            start,
            duration,
            0.0,
            0.0,
        )
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidPulse(msg));
        if !(self.duration > 0.0) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.rise >= 0.0 && self.rise.is_finite()) {
            return bad(format!("rise must be >= 0, got {}", self.rise));
        }
        if 2.0 * self.rise > self.duration {
            return bad(format!(
                "two edges of {} s do not fit in {} s",
                self.rise, self.duration
            ));
        }
        if !self.start.is_finite() || !self.carrier_detuning.is_finite() {
            return bad("start and carrier detuning must be finite".into());
        }
        if !(self.amplitude.re.is_finite() && self.amplitude.im.is_finite()) {
            return bad("amplitude must be finite".into());
        }
        if let PulseShape::Tabulated { dt, samples } = &self.shape {
            if !(*dt > 0.0) || samples.len() < 2 {
                return bad("tabulated envelope needs dt > 0 and at least two samples".into());
            }
        }
        Ok(())
    }

    /// Real edge profile in [0, 1] for the analytic shapes.
    fn profile(&self, t: f64) -> f64 {
        let x = t - self.start;
        if x < 0.0 || x >= self.duration {
            return 0.0;
        }
        let edge = x.min(self.duration - x);
        if self.rise == 0.0 || edge >= self.rise {
            return 1.0;
        }
        match self.shape {
            PulseShape::FlatTopGaussian => {
                let sigma = self.rise / GAUSS_EDGE_SIGMAS;
                let floor = (-0.5 * GAUSS_EDGE_SIGMAS * GAUSS_EDGE_SIGMAS).exp();
                let d = (self.rise - edge) / sigma;
                ((-0.5 * d * d).exp() - floor) / (1.0 - floor)
            }
            PulseShape::FlatTopCosine => {
                0.5 * (1.0 - (std::f64::consts::PI * edge / self.rise).cos())
            }
            _ => 1.0,
        }
    }

    pub fn value(&self, t: f64) -> Complex64 {
        let base = match &self.shape {
            PulseShape::Tabulated { dt, samples } => {
                let x = (t - self.start) / dt;
                if x < 0.0 || x > (samples.len() - 1) as f64 {
                    return Complex64::new(0.0, 0.0);
                }
                let i = (x.floor() as usize).min(samples.len() - 2);
                let frac = x - i as f64;
                samples[i] * (1.0 - frac) + samples[i + 1] * frac
            }
            _ => Complex64::new(self.profile(t), 0.0),
        };
        let carrier = if self.carrier_detuning == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, -self.carrier_detuning * t)
        };
        self.amplitude * base * carrier
    }

    /// Value on the flat top; what a steady-state solve uses as the drive.
    pub fn plateau(&self) -> Complex64 {
        match &self.shape {
            PulseShape::Tabulated { samples, .. } => self.amplitude * samples[samples.len() / 2],
            _ => self.amplitude,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut p = self.clone();
        p.amplitude *= factor;
        p
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}
