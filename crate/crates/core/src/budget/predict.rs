use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use super::coherence::{t1_budget, CoherenceBudget, T1Model};
use super::thermal::{
    average_power, bose_occupation, excited_population, excited_population_temperature, PowerLaw,
    ThermalModel, ThermalPoint,
};
use super::transduction::conversion_efficiency;
use super::BudgetError;
use crate::device::DeviceParams;

/// The `[budget]` config section. Every key is optional.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSettings {
    /// Dark T1 that calibrates the radiative channel.
    pub t1_dark_us: f64,
    pub x_neq: f64,
    pub purcell_filter: f64,
    pub broadening_slope: f64,
    /// Dark thermal excitation of the qubit; fixes its base temperature.
    pub p_thermal: f64,
    /// Dark cQED cavity temperature.
    pub cavity_base_mk: f64,
    pub mxc_base_mk: f64,
    /// Mixing-chamber heating coefficient, K/W^γ.
    pub mxc_coeff: f64,
    pub eo_base_mk: f64,
    /// Transducer-mode heating coefficient, K/W^γ.
    pub eo_coeff: f64,
    pub heating_exponent: f64,
    pub pulse_power_w: f64,
    pub pulse_duration_us: f64,
    pub integration_us: f64,
    pub separation_us: f64,
    /// Additional per-state assignment error not covered by the model.
    pub residual: f64,
    pub cooperativity: f64,
}

impl Default for BudgetSettings {
    fn default() -> Self {
        BudgetSettings {
            t1_dark_us: 33.0,
            x_neq: 1e-7,
            purcell_filter: 0.1,
            broadening_slope: 100.0,
            p_thermal: 0.015,
            cavity_base_mk: 75.0,
            mxc_base_mk: 7.0,
            mxc_coeff: 11.9,
            eo_base_mk: 75.0,
            eo_coeff: 59.0,
            heating_exponent: 0.54,
            pulse_power_w: 0.14,
            pulse_duration_us: 2.0,
            integration_us: 1.8,
            separation_us: 2.0,
            residual: 0.0,
            cooperativity: 0.00393,
        }
    }
}

impl BudgetSettings {
    /// Reads the `[budget]` table of a config file; defaults if absent.
    pub fn from_toml_str(text: &str) -> Result<Self, BudgetError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| BudgetError::Calibration(e.to_string()))?;
        match table.get("budget") {
            None => Ok(Self::default()),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| BudgetError::Calibration(format!("[budget]: {e}"))),
        }
    }
}

/// Calibrated chain from average optical power to coherence and readout
/// predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetModel {
    pub params: DeviceParams,
    pub thermal: ThermalModel,
    pub t1: T1Model,
    pub x_neq: f64,
    pub pulse_energy: f64,
    pub integration: f64,
    pub separation: f64,
    pub residual: f64,
    pub cooperativity: f64,
}

/// Model outputs at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetPoint {
    pub rep_rate: f64,
    pub thermal: ThermalPoint,
    pub n_th_cavity: f64,
    pub p_thermal: f64,
    pub coherence: CoherenceBudget,
    pub fidelity: f64,
    pub qnd: f64,
    pub cooperativity: f64,
    pub eta_eo: f64,
}

impl BudgetModel {
    pub fn new(p: &DeviceParams, s: &BudgetSettings) -> Result<Self, BudgetError> {
        let positive = [
            ("t1_dark_us", s.t1_dark_us),
            ("p_thermal", s.p_thermal),
            ("cavity_base_mk", s.cavity_base_mk),
            ("mxc_base_mk", s.mxc_base_mk),
            ("eo_base_mk", s.eo_base_mk),
            ("heating_exponent", s.heating_exponent),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BudgetError::Calibration(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        let non_negative = [
            ("x_neq", s.x_neq),
            ("purcell_filter", s.purcell_filter),
            ("broadening_slope", s.broadening_slope),
            ("mxc_coeff", s.mxc_coeff),
            ("eo_coeff", s.eo_coeff),
            ("pulse_power_w", s.pulse_power_w),
            ("pulse_duration_us", s.pulse_duration_us),
            ("integration_us", s.integration_us),
            ("separation_us", s.separation_us),
            ("residual", s.residual),
            ("cooperativity", s.cooperativity),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BudgetError::Calibration(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if s.p_thermal >= 0.5 || s.residual > 0.5 {
            return Err(BudgetError::Calibration(
                "p_thermal must be < 0.5 and residual <= 0.5".into(),
            ));
        }
        let mk = 1e-3;
        let t_mxc0 = s.mxc_base_mk * mk;
        // base temperatures chosen so the dark values include the mixing chamber
        let floor_out = |name: &str, t: f64| {
            if t <= t_mxc0 {
                return Err(BudgetError::Calibration(format!(
                    "dark {name} temperature {t} K must exceed the mixing-chamber base {t_mxc0} K"
                )));
            }
            Ok((t.powi(4) - t_mxc0.powi(4)).powf(0.25))
        };
        let thermal = ThermalModel {
            mxc: PowerLaw {
                t0: s.mxc_base_mk * mk,
                coeff: s.mxc_coeff,
                exponent: s.heating_exponent,
            },
            eo: PowerLaw {
                t0: s.eo_base_mk * mk,
                coeff: s.eo_coeff,
                exponent: s.heating_exponent,
            },
            cavity_base: floor_out("cavity", s.cavity_base_mk * mk)?,
            qubit_base: floor_out(
                "qubit",
                excited_population_temperature(s.p_thermal, p.omega_q)?,
            )?,
        };
        let dark = thermal.at(0.0);
        let t1 = T1Model::calibrated(
            p,
            s.purcell_filter,
            s.broadening_slope,
            dark.t_qubit,
            dark.t_cavity,
            s.x_neq,
            s.t1_dark_us * 1e-6,
        )?;
        Ok(BudgetModel {
            params: p.clone(),
            thermal,
            t1,
            x_neq: s.x_neq,
            pulse_energy: s.pulse_power_w * s.pulse_duration_us * 1e-6,
            integration: s.integration_us * 1e-6,
            separation: s.separation_us * 1e-6,
            residual: s.residual,
            cooperativity: s.cooperativity,
        })
    }

    /// Predictions at given component temperatures.
    pub fn at_temperatures(
        &self,
        rep_rate: f64,
        thermal: ThermalPoint,
    ) -> Result<BudgetPoint, BudgetError> {
        let p = &self.params;
        let coherence = t1_budget(p, thermal.t_qubit, thermal.t_cavity, self.x_neq, &self.t1)?;
        let p_thermal = excited_population(thermal.t_qubit, p.omega_q);
        let (fidelity, qnd) = readout_prediction(
            p_thermal,
            coherence.t1,
            self.integration,
            self.separation,
            self.residual,
        );
        Ok(BudgetPoint {
            rep_rate,
            thermal,
            n_th_cavity: bose_occupation(thermal.t_cavity, p.cqed.omega),
            p_thermal,
            coherence,
            fidelity,
            qnd,
            cooperativity: self.cooperativity,
            eta_eo: conversion_efficiency(
                self.cooperativity,
                p.eo.efficiency(),
                p.optical.efficiency(),
            )?,
        })
    }

    pub fn at_power(&self, p_avg: f64) -> Result<BudgetPoint, BudgetError> {
        if !(p_avg >= 0.0) {
            return Err(BudgetError::Invalid(format!(
                "average power must be >= 0, got {p_avg}"
            )));
        }
        let rate = if self.pulse_energy > 0.0 {
            p_avg / self.pulse_energy
        } else {
            0.0
        };
        self.at_temperatures(rate, self.thermal.at(p_avg))
    }

    pub fn at_rate(&self, rep_rate: f64) -> Result<BudgetPoint, BudgetError> {
        if !(rep_rate >= 0.0) {
            return Err(BudgetError::Invalid(format!(
                "repetition rate must be >= 0, got {rep_rate}"
            )));
        }
        let p_avg = average_power(self.pulse_energy, 1.0, rep_rate);
        self.at_temperatures(rep_rate, self.thermal.at(p_avg))
    }
}

/// Readout fidelity and QND metric for thermal excitation `p_thermal`.
///
/// An |e⟩ shot decaying before the middle of the integration window lands on
/// the |g⟩ side of a high-SNR threshold, so `s = e^{−t_int/2T1}` is the
/// survival that counts. Consecutive measurements `t_sep` apart agree with
/// probability `1 − p_thermal` for |g⟩ and `e^{−t_sep/T1}` for |e⟩.
pub fn readout_prediction(
    p_thermal: f64,
    t1: f64,
    integration: f64,
    separation: f64,
    residual: f64,
) -> (f64, f64) {
    let s = (-0.5 * integration / t1).exp();
    let eps_g = p_thermal * s + residual;
    let eps_e = 1.0 - s + residual;
    let fidelity = 1.0 - 0.5 * (eps_g + eps_e);
    let qnd = 0.5 * (1.0 - p_thermal + (-separation / t1).exp());
    (fidelity, qnd)
}

/// Predictions over a list of repetition rates, in input order.
pub fn predict_fidelity_vs_power(
    rep_rates: &[f64],
    model: &BudgetModel,
) -> Result<Vec<BudgetPoint>, BudgetError> {
    rep_rates.par_iter().map(|&r| model.at_rate(r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    RepRate,
    Power,
    /// Common temperature of the cQED cavity and the qubit.
    Temperature,
    Cooperativity,
}

impl SweepVar {
    pub fn tag(self) -> &'static str {
        match self {
            SweepVar::RepRate => "rep_rate",
            SweepVar::Power => "power",
            SweepVar::Temperature => "temperature",
            SweepVar::Cooperativity => "cooperativity",
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SweepVar {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SweepVar::RepRate,
            SweepVar::Power,
            SweepVar::Temperature,
            SweepVar::Cooperativity,
        ]
        .into_iter()
        .find(|v| v.tag() == s)
        .ok_or_else(|| {
            BudgetError::Invalid(format!(
                "unknown sweep variable `{s}` (expected rep_rate, power, temperature or cooperativity)"
            ))
        })
    }
}

/// Linear grid `var:start:stop:steps`; SI units (Hz, W, K, dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Sweep {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [var, start, stop, steps] = parts[..] else {
            return Err(BudgetError::Invalid(format!(
                "sweep `{s}` must have the form var:start:stop:steps"
            )));
        };
        let num = |x: &str| {
            x.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    BudgetError::Invalid(format!("sweep bound `{x}` is not a finite number"))
                })
        };
        let steps = steps
            .parse::<usize>()
            .map_err(|_| BudgetError::Invalid(format!("sweep steps `{steps}` is not a count")))?;
        Ok(Sweep {
            var: var.parse()?,
            start: num(start)?,
            stop: num(stop)?,
            steps,
        })
    }
}

/// Evaluates the model on every grid point, rows in grid order.
pub fn run_sweep(model: &BudgetModel, sweep: &Sweep) -> Result<Vec<BudgetPoint>, BudgetError> {
    let values = sweep.values();
    if values.is_empty() {
        return Err(BudgetError::EmptyGrid);
    }
    values
        .par_iter()
        .map(|&v| match sweep.var {
            SweepVar::RepRate => model.at_rate(v),
            SweepVar::Power => model.at_power(v),
            SweepVar::Temperature => {
                if !(v > 0.0) {
                    return Err(BudgetError::Invalid(format!(
                        "temperature must be > 0, got {v}"
                    )));
                }
                let mut t = model.thermal.at(0.0);
                t.t_cavity = v;
                t.t_qubit = v;
                model.at_temperatures(0.0, t)
            }
            SweepVar::Cooperativity => {
                let mut m = model.clone();
                m.cooperativity = v;
                m.at_rate(0.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> BudgetModel {
        BudgetModel::new(&DeviceParams::reference(6.251), &BudgetSettings::default()).unwrap()
    }

    #[test]
    fn dark_point_reproduces_calibration() {
        let m = model();
        let b = m.at_rate(0.0).unwrap();
        assert!((b.coherence.t1 / 33e-6 - 1.0).abs() < 1e-12);
        assert!((b.p_thermal - 0.015).abs() < 1e-12);
        assert_eq!(b.thermal.p_avg, 0.0);
        assert_eq!(m.at_power(0.0).unwrap(), b);
    }

    #[test]
    fn predictions_degrade_with_rate() {
        let m = model();
        let rates: Vec<f64> = (0..=40).map(|k| k as f64 * 50.0).collect();
        let pts = predict_fidelity_vs_power(&rates, &m).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].fidelity <= w[0].fidelity);
            assert!(w[1].qnd <= w[0].qnd);
            assert!(w[1].coherence.t1 <= w[0].coherence.t1);
        }
        assert!(pts.last().unwrap().coherence.t1 < pts[0].coherence.t1);
    }

    #[test]
    fn closed_form_readout_terms() {
        let (f, q) = readout_prediction(0.0, 33e-6, 0.0, 2e-6, 0.0);
        assert_eq!(f, 1.0);
        assert!((q - 0.5 * (1.0 + (-2.0f64 / 33.0).exp())).abs() < 1e-15);
    }

    #[test]
    fn sweep_parsing_and_order() {
        let s: Sweep = "rep_rate:0:200:5".parse().unwrap();
        assert_eq!(s.values(), vec![0.0, 50.0, 100.0, 150.0, 200.0]);
        let rows = run_sweep(&model(), &s).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.rep_rate).collect::<Vec<_>>(),
            s.values()
        );
        assert!("bogus:0:1:2".parse::<Sweep>().is_err());
        assert!("power:0:1".parse::<Sweep>().is_err());
        let empty: Sweep = "power:0:1:0".parse().unwrap();
        assert!(matches!(
            run_sweep(&model(), &empty),
            Err(BudgetError::EmptyGrid)
        ));
    }

    #[test]
    fn settings_from_config() {
        let s =
            BudgetSettings::from_toml_str("[qubit]\nfreq_ghz = 6.2\n[budget]\nresidual = 0.01\n")
                .unwrap();
        assert_eq!(s.residual, 0.01);
        assert_eq!(s.x_neq, 1e-7);
        assert!(BudgetSettings::from_toml_str("[budget]\nbogus = 1.0\n").is_err());
        assert_eq!(
            BudgetSettings::from_toml_str("").unwrap(),
            BudgetSettings::default()
        );
    }
}
