//! Simulation and analysis of dispersive qubit readout through a cascaded
//! cQED cavity and a triply resonant electro-optic transceiver.
//!
//! - [`device`]: parameter schema, config loading and derived quantities
//! - [`dynamics`]: mean-field integration, steady states and spectra
//! - [`detection`]: single-shot synthesis, discrimination and coherence fits
//! - [`budget`]: thermal, coherence and efficiency models
//! - [`io`]: CSV and binary tables, run manifests
//! - [`cli`]: the `eoreadout` batch front end

pub mod budget;
pub mod cli;
pub mod constants;
pub mod detection;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod pulse;

pub use error::{Error, Result};
