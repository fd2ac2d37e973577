use num_complex::Complex64;

use super::pump::{pump_amplitude_for_cooperativity, steady_pump_amplitude};
use super::spectrum::unit_response;
use super::{integrate, steady_state, DynamicsError, InputPort, LinearSystem, PumpDrive, Scheme};
use crate::device::{DeviceParams, QubitState};
use crate::pulse::PulseEnvelope;

/// Intracavity amplitude targets √n_meas for microwave and optical drive.
pub const SQRT_N_MEAS_MW: f64 = 122.0;
pub const SQRT_N_MEAS_OPT: f64 = 116.0;
/// Cooperativity reached on the pump plateau by the default pump pulse.
pub const DEFAULT_COOPERATIVITY: f64 = 0.00393;

/// Readout tone, scaled so the |g⟩-branch steady intracavity amplitude of the
/// cQED cavity equals `sqrt_n_meas`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutTone {
    pub sqrt_n_meas: f64,
    pub start: f64,
    pub duration: f64,
    pub rise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub tone: ReadoutTone,
    /// Optical pump input envelope, photon-flux units. `None` keeps the pump off.
    pub pump: Option<PulseEnvelope>,
    pub record: f64,
    /// Output sample spacing.
    pub sample_dt: f64,
    /// Integration step; derived from the stability bound when `None`.
    pub dt: Option<f64>,
    pub stokes: bool,
}

impl ScenarioOptions {
    /// 3 μs record sampled every 10 ns. The pump is a 2 μs flat-top pulse
    /// with 100 ns cosine ramps starting at 0.5 μs, off for mw-mw.
    pub fn defaults(scheme: Scheme, p: &DeviceParams) -> Self {
        let record = 3.0e-6;
        let pump = match scheme {
            Scheme::MwMw => None,
            _ => Some(
                PulseEnvelope::flat_top_cosine(
                    pump_amplitude_for_cooperativity(p, DEFAULT_COOPERATIVITY),
                    0.5e-6,
                    2.0e-6,
                    100e-9,
                )
                .expect("static pump pulse is valid"),
            ),
        };
        ScenarioOptions {
            tone: ReadoutTone {
                sqrt_n_meas: match scheme {
                    Scheme::OptOpt => SQRT_N_MEAS_OPT,
                    _ => SQRT_N_MEAS_MW,
                },
                start: 0.0,
                // falling edge lies past the end of the record
                duration: record + 20e-9,
                rise: 20e-9,
            },
            pump,
            record,
            sample_dt: 10e-9,
            dt: None,
            stokes: true,
        }
    }

    /// Coupling on the pump plateau.
    pub fn plateau_coupling(&self, p: &DeviceParams) -> Complex64 {
        self.pump
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |pulse| {
                steady_pump_amplitude(p, pulse.plateau()) * p.g0
            })
    }
}

/// Averaged detected output for one prepared qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub scheme: Scheme,
    pub state: QubitState,
    pub times: Vec<f64>,
    /// Complex output envelope at the detection port.
    pub envelope: Vec<Complex64>,
    pub power: Vec<f64>,
    /// Steady detected output with the tone on and the pump at its plateau.
    pub steady: Complex64,
    /// Detected power with the pump off (the reflected optical input in opt-opt).
    pub background: f64,
    pub drive_amplitude: f64,
}

impl ScenarioTrace {
    pub fn steady_power(&self) -> f64 {
        self.steady.norm_sqr()
    }
}

fn input_port(scheme: Scheme) -> InputPort {
    match scheme {
        Scheme::OptOpt => InputPort::Optical,
        _ => InputPort::Cqed,
    }
}

/// Drive amplitude putting `sqrt_n_meas` into the |g⟩-branch cQED cavity
/// in steady state at coupling `g`.
pub fn calibrate_readout_amplitude(
    scheme: Scheme,
    p: &DeviceParams,
    sqrt_n_meas: f64,
    g: Complex64,
    stokes: bool,
) -> Result<f64, DynamicsError> {
    let sys = LinearSystem::new(p.clone(), scheme, QubitState::G)
        .with_drive(input_port(scheme), PulseEnvelope::constant(1.0.into()))?
        .with_stokes(stokes);
    let (x, _) = unit_response(&sys.matrices(g, 0.0)?, 0.0)?;
    let per_unit = x[0].norm();
    if !(per_unit > 0.0) {
        return Err(DynamicsError::Invalid(format!(
            "{scheme} drive does not reach the cQED cavity at this pump coupling"
        )));
    }
    Ok(sqrt_n_meas / per_unit)
}

fn step_for(sys: &LinearSystem, sample_dt: f64) -> f64 {
    let bound = 1.0 / (20.0 * sys.max_rate());
    sample_dt / (sample_dt / bound).ceil()
}

/// Runs one readout for `state` and returns the averaged detected trace.
pub fn readout_scenario(
    scheme: Scheme,
    p: &DeviceParams,
    state: QubitState,
    opts: &ScenarioOptions,
) -> Result<ScenarioTrace, DynamicsError> {
    if !(opts.sample_dt > 0.0 && opts.record >= opts.sample_dt) {
        return Err(DynamicsError::Invalid(format!(
            "record {} s must span at least one sample of {} s",
            opts.record, opts.sample_dt
        )));
    }
    let g_plateau = opts.plateau_coupling(p);
    let amplitude =
        calibrate_readout_amplitude(scheme, p, opts.tone.sqrt_n_meas, g_plateau, opts.stokes)?;
    let tone = PulseEnvelope::flat_top_gaussian(
        amplitude,
        opts.tone.start,
        opts.tone.duration,
        opts.tone.rise,
    )?;
    let port = input_port(scheme);
    let base = LinearSystem::new(p.clone(), scheme, state)
        .with_drive(port, tone)?
        .with_stokes(opts.stokes);
    let detect = base.detection_port();

    let steady =
        steady_state(&base.clone().with_pump(PumpDrive::Constant(g_plateau)))?.output(detect);
    let background = steady_state(&base)?.output(detect).norm_sqr();

    let sys = match &opts.pump {
        Some(pulse) => base.with_pump(PumpDrive::Pulse(pulse.clone())),
        None => base,
    };
    let dt = opts.dt.unwrap_or_else(|| step_for(&sys, opts.sample_dt));
    let stride = (opts.sample_dt / dt).round();
    if stride < 1.0 || (stride * dt - opts.sample_dt).abs() > 1e-6 * opts.sample_dt {
        return Err(DynamicsError::Invalid(format!(
            "sample spacing {} s is not a multiple of the step {dt} s",
            opts.sample_dt
        )));
    }
    let stride = stride as usize;
    let tr = integrate(&sys, dt, opts.record)?;
    let out = tr.output(detect);
    let idx: Vec<usize> = (0..tr.len()).step_by(stride).collect();
    let times: Vec<f64> = idx.iter().map(|&i| tr.times[i]).collect();
    let envelope: Vec<Complex64> = idx.iter().map(|&i| out[i]).collect();
    let power = envelope.iter().map(|z| z.norm_sqr()).collect();
    Ok(ScenarioTrace {
        scheme,
        state,
        times,
        envelope,
        power,
        steady,
        background,
        drive_amplitude: amplitude,
    })
}
