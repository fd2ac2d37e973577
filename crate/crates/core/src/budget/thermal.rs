use crate::constants::{HBAR, K_B};

use super::BudgetError;

/// Mean photon number `1/(e^{ħω/k_B T} − 1)` of a mode at temperature `t`.
pub fn bose_occupation(t: f64, omega: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // exp_m1 keeps precision in the classical limit
    1.0 / (HBAR * omega / (K_B * t)).exp_m1()
}

/// Temperature at which a mode at `omega` holds `n` thermal quanta.
pub fn bose_temperature(n: f64, omega: f64) -> Result<f64, BudgetError> {
    if !(n > 0.0 && n.is_finite() && omega > 0.0) {
        return Err(BudgetError::Invalid(format!(
            "occupation must be > 0 and frequency > 0, got n = {n}, ω = {omega}"
        )));
    }
    Ok(HBAR * omega / (K_B * (1.0 / n).ln_1p()))
}

/// Excited-state population `1/(e^{ħω/k_B T} + 1)` of a two-level system in
/// equilibrium at `t`. Matches the Bose occupation to first order and stays
/// below one half when heated.
pub fn excited_population(t: f64, omega: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / ((HBAR * omega / (K_B * t)).exp() + 1.0)
}

/// Temperature at which a two-level system at `omega` has excited population `p`.
pub fn excited_population_temperature(p: f64, omega: f64) -> Result<f64, BudgetError> {
    if !(p > 0.0 && p < 0.5 && omega > 0.0) {
        return Err(BudgetError::Invalid(format!(
            "population must be in (0, 0.5) and frequency > 0, got p = {p}, ω = {omega}"
        )));
    }
    Ok(HBAR * omega / (K_B * (1.0 / p - 1.0).ln()))
}

/// Smooth floor `(T0⁴ + (c·P^γ)⁴)^{1/4}`: the base temperature at zero power
/// and the power law far above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub t0: f64,
    pub coeff: f64,
    pub exponent: f64,
}

const FLOOR_ORDER: i32 = 4;

pub fn temp_power_law(p_avg: f64, t0: f64, coeff: f64, exponent: f64) -> f64 {
    let excess = coeff * p_avg.max(0.0).powf(exponent);
    power_mean(t0, excess)
}

fn power_mean(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return a;
    }
    let q = FLOOR_ORDER as f64;
    (a.powi(FLOOR_ORDER) + b.powi(FLOOR_ORDER)).powf(1.0 / q)
}

impl PowerLaw {
    pub fn at(&self, p_avg: f64) -> f64 {
        temp_power_law(p_avg, self.t0, self.coeff, self.exponent)
    }
}

/// Time-averaged optical power of a pulse train.
pub fn average_power(pulse_power: f64, pulse_duration: f64, rep_rate: f64) -> f64 {
    pulse_power * pulse_duration * rep_rate
}

/// Thermal equilibrium quasiparticle density `√(2π k_B T/Δ)·e^{−Δ/k_B T}`.
pub fn qp_density_equilibrium(t: f64, gap: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r = gap / (K_B * t);
    (2.0 * std::f64::consts::PI / r).sqrt() * (-r).exp()
}

/// Component temperatures at one average optical power, kelvin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPoint {
    pub p_avg: f64,
    pub t_mxc: f64,
    pub t_eo: f64,
    pub t_cavity: f64,
    pub t_qubit: f64,
}

/// Heating of the mixing chamber and the transducer mode by the optical pump.
/// The cQED cavity and the qubit combine their own base temperatures with the
/// mixing chamber's, `(T_base⁴ + T_mxc⁴)^{1/4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModel {
    pub mxc: PowerLaw,
    pub eo: PowerLaw,
    pub cavity_base: f64,
    pub qubit_base: f64,
}

impl ThermalModel {
    pub fn at(&self, p_avg: f64) -> ThermalPoint {
        let t_mxc = self.mxc.at(p_avg);
        ThermalPoint {
            p_avg,
            t_mxc,
            t_eo: self.eo.at(p_avg),
            t_cavity: power_mean(self.cavity_base, t_mxc),
            t_qubit: power_mean(self.qubit_base, t_mxc),
        }
    }
}
