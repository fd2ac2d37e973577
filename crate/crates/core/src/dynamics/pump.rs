use num_complex::Complex64;

use super::DynamicsError;
use crate::constants::HBAR;
use crate::device::DeviceParams;
use crate::pulse::PulseEnvelope;

/// Pump mode amplitude and the coupling it induces, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpTrajectory {
    pub times: Vec<f64>,
    pub a_p: Vec<Complex64>,
    /// g(t) = ā_p(t) g₀, rad/s.
    pub g: Vec<Complex64>,
}

/// Input photon-flux amplitude √(P/ħω_o) of a pump of power `power` (W),
/// reduced by the fiber mode-matching factor.
pub fn pump_amplitude_for_power(p: &DeviceParams, power: f64) -> f64 {
    (p.mode_matching * power.max(0.0) / (HBAR * p.optical.omega)).sqrt()
}

/// Steady pump amplitude under constant input `a_in`.
pub fn steady_pump_amplitude(p: &DeviceParams, a_in: Complex64) -> Complex64 {
    (p.eta_p * p.kappa_p).sqrt() * a_in / Complex64::new(0.5 * p.kappa_p, -p.delta_p)
}

/// Constant pump input that yields cooperativity `c` in steady state.
pub fn pump_amplitude_for_cooperativity(p: &DeviceParams, c: f64) -> f64 {
    let g = 0.5 * (c.max(0.0) * p.eo.kappa * p.optical.kappa).sqrt();
    let a_p = g / p.g0;
    a_p * Complex64::new(0.5 * p.kappa_p, -p.delta_p).norm() / (p.eta_p * p.kappa_p).sqrt()
}

pub(crate) fn pump_rate(p: &DeviceParams) -> Complex64 {
    Complex64::new(-0.5 * p.kappa_p, p.delta_p)
}

/// Checks that `times` is uniform and returns its spacing.
pub(crate) fn uniform_step(times: &[f64]) -> Result<f64, DynamicsError> {
    if times.len() < 2 {
        return Err(DynamicsError::Invalid(
            "time grid needs at least two points".into(),
        ));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(DynamicsError::NonUniformGrid(1));
    }
    for (i, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(DynamicsError::NonUniformGrid(i + 1));
        }
    }
    Ok(dt)
}

/// Integrates the pump mode alone under `pulse` on the uniform grid `times`,
/// starting from an empty pump cavity.
pub fn pump_trajectory(
    pulse: &PulseEnvelope,
    p: &DeviceParams,
    times: &[f64],
) -> Result<PumpTrajectory, DynamicsError> {
    pulse.validate()?;
    let dt = uniform_step(times)?;
    let rate = pump_rate(p);
    let gain = (p.eta_p * p.kappa_p).sqrt();
    let f = |t: f64, a: Complex64| rate * a + gain * pulse.value(t);
    let mut a = Complex64::new(0.0, 0.0);
    let mut a_p = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        a_p.push(a);
        if i + 1 == times.len() {
            break;
        }
        let k1 = f(t, a);
        let k2 = f(t + 0.5 * dt, a + 0.5 * dt * k1);
        let k3 = f(t + 0.5 * dt, a + 0.5 * dt * k2);
        let k4 = f(t + dt, a + dt * k3);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(DynamicsError::NonFinite {
                index: i + 1,
                time: t + dt,
            });
        }
    }
    let g = a_p.iter().map(|a| a * p.g0).collect();
    Ok(PumpTrajectory {
        times: times.to_vec(),
        a_p,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn no_input_no_pump() {
        let p = DeviceParams::reference(6.251);
        let pulse = PulseEnvelope::rectangular(0.0, 0.0, 1e-6).unwrap();
        let tr = pump_trajectory(&pulse, &p, &grid(1e-10, 100)).unwrap();
        assert!(tr.a_p.iter().chain(&tr.g).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn settles_to_closed_form() {
        let p = DeviceParams::reference(6.251);
        let pulse = PulseEnvelope::constant(Complex64::new(1.0e8, 0.0));
        let dt = 0.05 / p.kappa_p;
        // 40 / κ_p leaves e^-20 of the transient.
        let n = (40.0 / p.kappa_p / dt) as usize;
        let tr = pump_trajectory(&pulse, &p, &grid(dt, n)).unwrap();
        let expect = 2.0 * (p.eta_p / p.kappa_p).sqrt() * 1.0e8;
        let last = tr.a_p.last().unwrap();
        assert!((last.re - expect).abs() < 1e-8 * expect);
        assert!((steady_pump_amplitude(&p, 1.0e8.into()).re - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn cooperativity_inversion() {
        let p = DeviceParams::reference(6.251);
        let a_in = pump_amplitude_for_cooperativity(&p, 0.0039);
        let g = steady_pump_amplitude(&p, a_in.into()).norm() * p.g0;
        let c = 4.0 * g * g / (p.eo.kappa * p.optical.kappa);
        assert!((c - 0.0039).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let p = DeviceParams::reference(6.251);
        let pulse = PulseEnvelope::constant(1.0.into());
        let err = pump_trajectory(&pulse, &p, &[0.0, 1e-9, 2.5e-9]).unwrap_err();
        assert!(matches!(err, DynamicsError::NonUniformGrid(2)));
    }
}
