//! Mean-field input–output model of the cQED cavity cascaded with the
//! electro-optic transceiver.
//!
//! All mode amplitudes live in frames rotating at their own resonance: the
//! microwave modes at ω_e, the optical signal at ω_p + ω_e, the Stokes mode at
//! ω_p − ω_e. Amplitudes are in √photons, fields in √(photons/s). The Stokes
//! and TM modes enter through their conjugates, which keeps the equations
//! complex-linear in the signal drive.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

mod integrate;
mod pump;
mod scenario;
mod spectrum;
mod system;

pub use integrate::{integrate, integrate_from, Trajectory};
pub use pump::{
    pump_amplitude_for_cooperativity, pump_amplitude_for_power, pump_trajectory,
    steady_pump_amplitude, PumpTrajectory,
};
pub use scenario::{
    calibrate_readout_amplitude, readout_scenario, ReadoutTone, ScenarioOptions, ScenarioTrace,
};
pub use spectrum::{
    cavity_reflection, conversion_transfer, reflection_spectrum, steady_state, ConversionTransfer,
    SteadyState,
};
pub use system::{InputPort, LinearSystem, Matrices, PumpDrive, StateVec, NMODES};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("time grid is not uniform at index {0}")]
    NonUniformGrid(usize),
    #[error("step {dt:e} s exceeds the stability bound {bound:e} s (1/(20 x max rate))")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("non-finite amplitude at step {index} (t = {time:e} s)")]
    NonFinite { index: usize, time: f64 },
    #[error("drift matrix is singular: {0}")]
    Singular(String),
    #[error("steady state requires a time-independent coupling; the pump is pulsed")]
    TimeDependentDrift,
    #[error("scheme {scheme} cannot take a drive on port {port:?}")]
    SchemeMismatch { scheme: Scheme, port: InputPort },
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl DynamicsError {
    /// True for errors caused by a bad request rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            DynamicsError::InvalidPulse(_)
                | DynamicsError::NonUniformGrid(_)
                | DynamicsError::StepTooLarge { .. }
                | DynamicsError::SchemeMismatch { .. }
                | DynamicsError::Invalid(_)
        )
    }
}

/// Readout topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Microwave drive, microwave detection of the field reflected by the EO cavity.
    MwMw,
    /// Microwave drive, optical detection of the converted signal.
    MwOpt,
    /// Optical drive down-converted to the cQED cavity and converted back.
    OptOpt,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::MwMw, Scheme::MwOpt, Scheme::OptOpt];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::MwMw => "mw-mw",
            Scheme::MwOpt => "mw-opt",
            Scheme::OptOpt => "opt-opt",
        }
    }

    /// The cQED → EO link is unidirectional except in the all-optical scheme.
    pub fn bidirectional(self) -> bool {
        matches!(self, Scheme::OptOpt)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.tag() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected mw-mw, mw-opt or opt-opt)"))
    }
}

/// Output port whose field a scheme detects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputPort {
    Cqed,
    Eo,
    Optical,
}

/// Mean-field amplitudes of every mode at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeVector {
    pub a_c: Complex64,
    pub a_e: Complex64,
    pub a_o: Complex64,
    pub a_s: Complex64,
    pub a_tm: Complex64,
    pub a_p: Complex64,
}

impl ModeVector {
    pub fn is_finite(&self) -> bool {
        [self.a_c, self.a_e, self.a_o, self.a_s, self.a_tm, self.a_p]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
