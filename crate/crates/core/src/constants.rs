//! Physical constants (CODATA 2018, exact where the SI defines them).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817_65e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649_000_00e-23;
/// Elementary charge, C (also J per eV).
pub const E_CHARGE: f64 = 1.602_176_634_00e-19;
/// Variance of an ideal phase-insensitive amplifier in photon-amplitude units.
pub const SIGMA0_SQ: f64 = 0.5;

pub const TAU: f64 = std::f64::consts::TAU;
