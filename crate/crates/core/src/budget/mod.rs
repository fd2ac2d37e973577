//! Thermal, coherence and transduction-efficiency models for the qubit under
//! optical illumination.

use thiserror::Error;

mod coherence;
mod predict;
mod thermal;
mod transduction;

pub use coherence::{qp_rate, shot_noise_dephasing, t1_budget, t2_limit, CoherenceBudget, T1Model};
pub use predict::{
    predict_fidelity_vs_power, readout_prediction, run_sweep, BudgetModel, BudgetPoint,
    BudgetSettings, Sweep, SweepVar,
};
pub use thermal::{
    average_power, bose_occupation, bose_temperature, excited_population,
    excited_population_temperature, qp_density_equilibrium, temp_power_law, PowerLaw, ThermalModel,
    ThermalPoint,
};
pub use transduction::{conversion_efficiency, cooperativity, coupling_for_cooperativity};

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("budget calibration: {0}")]
    Calibration(String),
}
