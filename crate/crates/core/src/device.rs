//! Device parameters, the config-file schema, and quantities derived from them.
//!
//! Every frequency-like quantity is held as an angular rate in rad/s. Config
//! files quote `f = ω/2π` with the unit carried by the key suffix
//! (`_thz`, `_ghz`, `_mhz`, `_khz`, `_hz`), times with `_s`/`_ms`/`_us`/`_ns`
//! and the superconducting gap with `_uev`/`_mev`/`_ev`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

use crate::constants::{E_CHARGE, TAU};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("missing mandatory field `{0}`")]
    MissingField(String),
    #[error("field `{field}`: {msg}")]
    BadValue { field: String, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invariant violated for `{field}`: {msg}")]
    Invariant { field: String, msg: String },
}

fn invariant(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invariant {
        field: field.to_string(),
        msg: msg.into(),
    }
}

/// A single damped resonator: angular frequency, total and external decay rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub omega: f64,
    pub kappa: f64,
    pub kappa_ext: f64,
}

impl Cavity {
    /// External coupling efficiency `κ_ext / κ`.
    pub fn efficiency(&self) -> f64 {
        self.kappa_ext / self.kappa
    }
}

/// Physical parameters of the qubit, the cQED cavity and the electro-optic transceiver.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub omega_q: f64,
    pub anharmonicity: f64,
    pub g_qc: f64,
    /// Dispersive shift χ.
    pub chi: f64,
    /// Lamb shift χ₀; the ground-state branch detuning of the two-branch model.
    pub chi0: f64,
    pub cqed: Cavity,
    pub eo: Cavity,
    pub optical: Cavity,
    /// Detuning δ_o of the optical signal mode from the pump-shifted resonance.
    pub delta_o: f64,
    /// Fiber-to-resonator mode-matching factor, kept separate from `optical.efficiency()`.
    pub mode_matching: f64,
    pub kappa_s: f64,
    pub delta_s: f64,
    pub kappa_tm: f64,
    pub delta_tm: f64,
    /// Stokes–TM coupling J.
    pub j_tm: f64,
    pub kappa_p: f64,
    pub delta_p: f64,
    pub eta_p: f64,
    /// Electro-optic vacuum coupling g₀.
    pub g0: f64,
    /// Amplitude transmission of the cable from the cQED cavity to the EO cavity.
    pub eta_ec: f64,
    /// Amplitude transmission of the cable from the EO cavity back to the cQED cavity.
    pub eta_ce: f64,
    /// Transport delay of the cQED → EO link, seconds.
    pub tau: f64,
    /// Superconducting gap, joules.
    pub gap: f64,
    pub t1_ref: Option<f64>,
    pub t2_ref: Option<f64>,
}

pub const DEFAULT_GAP_UEV: f64 = 205.0;
pub const DEFAULT_STOKES_DETUNING_MHZ: f64 = 100.0;
pub const DEFAULT_CABLE_EFFICIENCY: f64 = 0.9;

impl DeviceParams {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::from_table(&table)
    }

    pub fn from_table(table: &Table) -> Result<Self, ConfigError> {
        for key in table.keys() {
            if !DEVICE_SECTIONS.contains(&key.as_str()) && !FOREIGN_SECTIONS.contains(&key.as_str())
            {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }

        let mut qubit = Section::open(table, "qubit", true)?;
        let omega_q = qubit.req(Kind::Freq, "freq")?;
        let anharmonicity = qubit.req(Kind::Freq, "anharmonicity")?;
        let g_qc = qubit.req(Kind::Freq, "coupling")?;
        let chi = qubit.req(Kind::Freq, "dispersive_shift")?;
        let chi0 = qubit.req(Kind::Freq, "lamb_shift")?;
        let t1_ref = qubit.opt(Kind::Time, "t1")?;
        let t2_ref = qubit.opt(Kind::Time, "t2")?;
        let gap = qubit
            .opt(Kind::Energy, "gap")?
            .unwrap_or(DEFAULT_GAP_UEV * 1e-6 * E_CHARGE);
        qubit.finish()?;

        let cqed = Section::open(table, "cqed_cavity", true)?.cavity()?;
        let eo = Section::open(table, "eo_cavity", true)?.cavity()?;

        let mut opt = Section::open(table, "optical", true)?;
        let optical = Cavity {
            omega: opt.req(Kind::Freq, "freq")?,
            kappa: opt.req(Kind::Freq, "linewidth")?,
            kappa_ext: opt.req(Kind::Freq, "external")?,
        };
        let delta_o = opt.opt(Kind::Freq, "detuning")?.unwrap_or(0.0);
        let mode_matching = opt.opt(Kind::Plain, "mode_matching")?.unwrap_or(1.0);
        opt.finish()?;

        let mut stokes = Section::open(table, "stokes", false)?;
        let kappa_s = stokes
            .opt(Kind::Freq, "linewidth")?
            .unwrap_or(optical.kappa);
        let delta_s = stokes
            .opt(Kind::Freq, "detuning")?
            .unwrap_or(DEFAULT_STOKES_DETUNING_MHZ * 1e6 * TAU);
        stokes.finish()?;

        let mut tm = Section::open(table, "tm_mode", false)?;
        let kappa_tm = tm.opt(Kind::Freq, "linewidth")?.unwrap_or(optical.kappa);
        let delta_tm = tm.opt(Kind::Freq, "detuning")?.unwrap_or(0.0);
        let j_tm = tm.opt(Kind::Freq, "coupling")?.unwrap_or(0.0);
        tm.finish()?;

        let mut pump = Section::open(table, "pump", true)?;
        let kappa_p = pump.opt(Kind::Freq, "linewidth")?.unwrap_or(optical.kappa);
        let delta_p = pump.opt(Kind::Freq, "detuning")?.unwrap_or(0.0);
        let eta_p = pump
            .opt(Kind::Plain, "coupling_efficiency")?
            .unwrap_or(optical.kappa_ext / optical.kappa);
        let g0 = pump.req(Kind::Freq, "vacuum_coupling")?;
        pump.finish()?;

        let mut link = Section::open(table, "link", false)?;
        let eta_ec = link
            .opt(Kind::Plain, "eta_ec")?
            .unwrap_or(DEFAULT_CABLE_EFFICIENCY);
        let eta_ce = link
            .opt(Kind::Plain, "eta_ce")?
            .unwrap_or(DEFAULT_CABLE_EFFICIENCY);
        let tau = link.opt(Kind::Time, "delay")?.unwrap_or(0.0);
        link.finish()?;

        let params = DeviceParams {
            omega_q,
            anharmonicity,
            g_qc,
            chi,
            chi0,
            cqed,
            eo,
            optical,
            delta_o,
            mode_matching,
            kappa_s,
            delta_s,
            kappa_tm,
            delta_tm,
            j_tm,
            kappa_p,
            delta_p,
            eta_p,
            g0,
            eta_ec,
            eta_ce,
            tau,
            gap,
            t1_ref,
            t2_ref,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("qubit.freq", self.omega_q),
            ("qubit.coupling", self.g_qc),
            ("qubit.gap", self.gap),
            ("cqed_cavity.freq", self.cqed.omega),
            ("cqed_cavity.linewidth", self.cqed.kappa),
            ("eo_cavity.freq", self.eo.omega),
            ("eo_cavity.linewidth", self.eo.kappa),
            ("optical.freq", self.optical.omega),
            ("optical.linewidth", self.optical.kappa),
            ("stokes.linewidth", self.kappa_s),
            ("tm_mode.linewidth", self.kappa_tm),
            ("pump.linewidth", self.kappa_p),
            ("pump.vacuum_coupling", self.g0),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invariant(field, format!("must be finite and > 0, got {v}")));
            }
        }
        let non_negative = [
            ("cqed_cavity.external", self.cqed.kappa_ext),
            ("eo_cavity.external", self.eo.kappa_ext),
            ("optical.external", self.optical.kappa_ext),
            ("tm_mode.coupling", self.j_tm),
            ("link.delay", self.tau),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invariant(
                    field,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        for (field, c) in [
            ("cqed_cavity.external", &self.cqed),
            ("eo_cavity.external", &self.eo),
            ("optical.external", &self.optical),
        ] {
            if c.kappa_ext > c.kappa {
                return Err(invariant(
                    field,
                    format!(
                        "external rate {} exceeds total linewidth {} (rad/s)",
                        c.kappa_ext, c.kappa
                    ),
                ));
            }
        }
        for (field, v) in [
            ("link.eta_ec", self.eta_ec),
            ("link.eta_ce", self.eta_ce),
            ("pump.coupling_efficiency", self.eta_p),
            ("optical.mode_matching", self.mode_matching),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invariant(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        for (field, v) in [
            ("qubit.anharmonicity", self.anharmonicity),
            ("qubit.dispersive_shift", self.chi),
            ("qubit.lamb_shift", self.chi0),
            ("optical.detuning", self.delta_o),
            ("stokes.detuning", self.delta_s),
            ("tm_mode.detuning", self.delta_tm),
            ("pump.detuning", self.delta_p),
        ] {
            if !v.is_finite() {
                return Err(invariant(field, "must be finite"));
            }
        }
        for (field, v) in [("qubit.t1", self.t1_ref), ("qubit.t2", self.t2_ref)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invariant(field, format!("must be > 0, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// Serializes back to the config schema. Reparsing the output yields a
    /// bit-identical `DeviceParams`.
    pub fn to_toml_string(&self) -> String {
        let mut root = Table::new();
        let mut qubit = Table::new();
        put(&mut qubit, Kind::Freq, "freq", self.omega_q);
        put(&mut qubit, Kind::Freq, "anharmonicity", self.anharmonicity);
        put(&mut qubit, Kind::Freq, "coupling", self.g_qc);
        put(&mut qubit, Kind::Freq, "dispersive_shift", self.chi);
        put(&mut qubit, Kind::Freq, "lamb_shift", self.chi0);
        if let Some(t1) = self.t1_ref {
            put(&mut qubit, Kind::Time, "t1", t1);
        }
        if let Some(t2) = self.t2_ref {
            put(&mut qubit, Kind::Time, "t2", t2);
        }
        put(&mut qubit, Kind::Energy, "gap", self.gap);
        root.insert("qubit".into(), Value::Table(qubit));

        for (name, cav) in [("cqed_cavity", &self.cqed), ("eo_cavity", &self.eo)] {
            let mut t = Table::new();
            put(&mut t, Kind::Freq, "freq", cav.omega);
            put(&mut t, Kind::Freq, "linewidth", cav.kappa);
            put(&mut t, Kind::Freq, "external", cav.kappa_ext);
            root.insert(name.into(), Value::Table(t));
        }

        let mut opt = Table::new();
        put_unit(&mut opt, "freq", self.optical.omega, FreqUnit::THz);
        put(&mut opt, Kind::Freq, "linewidth", self.optical.kappa);
        put(&mut opt, Kind::Freq, "external", self.optical.kappa_ext);
        put(&mut opt, Kind::Freq, "detuning", self.delta_o);
        put(&mut opt, Kind::Plain, "mode_matching", self.mode_matching);
        root.insert("optical".into(), Value::Table(opt));

        let mut stokes = Table::new();
        put(&mut stokes, Kind::Freq, "linewidth", self.kappa_s);
        put(&mut stokes, Kind::Freq, "detuning", self.delta_s);
        root.insert("stokes".into(), Value::Table(stokes));

        let mut tm = Table::new();
        put(&mut tm, Kind::Freq, "linewidth", self.kappa_tm);
        put(&mut tm, Kind::Freq, "detuning", self.delta_tm);
        put(&mut tm, Kind::Freq, "coupling", self.j_tm);
        root.insert("tm_mode".into(), Value::Table(tm));

        let mut pump = Table::new();
        put(&mut pump, Kind::Freq, "linewidth", self.kappa_p);
        put(&mut pump, Kind::Freq, "detuning", self.delta_p);
        put(&mut pump, Kind::Plain, "coupling_efficiency", self.eta_p);
        put_unit(&mut pump, "vacuum_coupling", self.g0, FreqUnit::Hz);
        root.insert("pump".into(), Value::Table(pump));

        let mut link = Table::new();
        put(&mut link, Kind::Plain, "eta_ec", self.eta_ec);
        put(&mut link, Kind::Plain, "eta_ce", self.eta_ce);
        put(&mut link, Kind::Time, "delay", self.tau);
        root.insert("link".into(), Value::Table(link));

        toml::to_string(&root).expect("plain tables always serialize")
    }

    /// Parameters of the device table used throughout the documentation, with
    /// the given qubit frequency (two values are quoted for this device).
    pub fn reference(qubit_freq_ghz: f64) -> Self {
        let text = format!("[qubit]\nfreq_ghz = {qubit_freq_ghz}\n{REFERENCE_BODY}");
        Self::from_toml_str(&text).expect("reference config is valid")
    }
}

/// Reference device table; the qubit frequency is supplied separately.
pub const REFERENCE_BODY: &str = r#"anharmonicity_mhz = 201.0
coupling_mhz = 326.0
dispersive_shift_mhz = 6.6
lamb_shift_mhz = 26.0
t1_us = 40.0
t2_us = 1.5
gap_uev = 205.0

[cqed_cavity]
freq_ghz = 8.806
linewidth_mhz = 1.4
external_mhz = 1.0

[eo_cavity]
freq_ghz = 8.806
linewidth_mhz = 9.69
external_mhz = 3.42

[optical]
freq_thz = 193.4
linewidth_mhz = 81.0
external_mhz = 44.0

[pump]
vacuum_coupling_hz = 30.0
"#;

const DEVICE_SECTIONS: [&str; 8] = [
    "qubit",
    "cqed_cavity",
    "eo_cavity",
    "optical",
    "stokes",
    "tm_mode",
    "pump",
    "link",
];
/// Sections read by other parts of the toolkit; ignored here.
const FOREIGN_SECTIONS: [&str; 2] = ["readout", "budget"];

#[derive(Debug, Clone, Copy)]
enum Kind {
    Freq,
    Time,
    Energy,
    Plain,
}

#[derive(Debug, Clone, Copy)]
enum FreqUnit {
    THz,
    GHz,
    MHz,
    KHz,
    Hz,
}

impl FreqUnit {
    const ALL: [FreqUnit; 5] = [
        FreqUnit::THz,
        FreqUnit::GHz,
        FreqUnit::MHz,
        FreqUnit::KHz,
        FreqUnit::Hz,
    ];

    fn suffix(self) -> &'static str {
        match self {
            FreqUnit::THz => "thz",
            FreqUnit::GHz => "ghz",
            FreqUnit::MHz => "mhz",
            FreqUnit::KHz => "khz",
            FreqUnit::Hz => "hz",
        }
    }

    /// Multiplier from the quoted `f = ω/2π` to angular rad/s.
    fn to_angular(self) -> f64 {
        let hz = match self {
            FreqUnit::THz => 1e12,
            FreqUnit::GHz => 1e9,
            FreqUnit::MHz => 1e6,
            FreqUnit::KHz => 1e3,
            FreqUnit::Hz => 1.0,
        };
        hz * TAU
    }
}

fn units(kind: Kind) -> Vec<(&'static str, f64)> {
    match kind {
        Kind::Freq => FreqUnit::ALL
            .iter()
            .map(|u| (u.suffix(), u.to_angular()))
            .collect(),
        Kind::Time => vec![("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)],
        Kind::Energy => vec![
            ("ev", E_CHARGE),
            ("mev", 1e-3 * E_CHARGE),
            ("uev", 1e-6 * E_CHARGE),
        ],
        Kind::Plain => vec![("", 1.0)],
    }
}

fn key_for(base: &str, suffix: &str) -> String {
    if suffix.is_empty() {
        base.to_string()
    } else {
        format!("{base}_{suffix}")
    }
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: Vec<String>,
}

impl<'a> Section<'a> {
    fn open(root: &'a Table, name: &'static str, required: bool) -> Result<Self, ConfigError> {
        let table = match root.get(name) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                return Err(ConfigError::BadValue {
                    field: name.into(),
                    msg: "expected a table".into(),
                })
            }
            None if required => return Err(ConfigError::MissingField(name.into())),
            None => None,
        };
        Ok(Section {
            name,
            table,
            used: Vec::new(),
        })
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn opt(&mut self, kind: Kind, base: &str) -> Result<Option<f64>, ConfigError> {
        let Some(table) = self.table else {
            return Ok(None);
        };
        let mut found: Option<(String, f64)> = None;
        for (suffix, factor) in units(kind) {
            let key = key_for(base, suffix);
            if let Some(v) = table.get(&key) {
                if let Some((prev, _)) = &found {
                    return Err(ConfigError::BadValue {
                        field: self.field(base),
                        msg: format!("given twice (`{prev}` and `{key}`)"),
                    });
                }
                let x = match v {
                    Value::Float(f) => *f,
                    Value::Integer(i) => *i as f64,
                    _ => {
                        return Err(ConfigError::BadValue {
                            field: self.field(&key),
                            msg: "expected a number".into(),
                        })
                    }
                };
                if !x.is_finite() {
                    return Err(ConfigError::BadValue {
                        field: self.field(&key),
                        msg: "must be finite".into(),
                    });
                }
                self.used.push(key.clone());
                found = Some((key, x * factor));
            }
        }
        Ok(found.map(|(_, v)| v))
    }

    fn req(&mut self, kind: Kind, base: &str) -> Result<f64, ConfigError> {
        self.opt(kind, base)?.ok_or_else(|| {
            let hint = match kind {
                Kind::Freq => "_<thz|ghz|mhz|khz|hz>",
                Kind::Time => "_<s|ms|us|ns>",
                Kind::Energy => "_<ev|mev|uev>",
                Kind::Plain => "",
            };
            ConfigError::MissingField(format!("{}{hint}", self.field(base)))
        })
    }

    fn cavity(mut self) -> Result<Cavity, ConfigError> {
        let cav = Cavity {
            omega: self.req(Kind::Freq, "freq")?,
            kappa: self.req(Kind::Freq, "linewidth")?,
            kappa_ext: self.req(Kind::Freq, "external")?,
        };
        self.finish()?;
        Ok(cav)
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.used.iter().any(|u| u == key) {
                    return Err(ConfigError::UnknownKey(format!("{}.{}", self.name, key)));
                }
            }
        }
        Ok(())
    }
}

/// Finds a quoted value `x` such that `x * factor` reproduces `value` exactly.
fn exact_quote(value: f64, factor: f64) -> f64 {
    let guess = value / factor;
    if guess * factor == value || !guess.is_finite() {
        return guess;
    }
    let mut lo = guess;
    let mut hi = guess;
    for _ in 0..8 {
        lo = next_down(lo);
        hi = next_up(hi);
        if lo * factor == value {
            return lo;
        }
        if hi * factor == value {
            return hi;
        }
    }
    guess
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

fn put(table: &mut Table, kind: Kind, base: &str, value: f64) {
    let (suffix, factor) = match kind {
        Kind::Freq => {
            let unit = if value.abs() >= 1e9 * TAU {
                FreqUnit::GHz
            } else if value.abs() >= 1e5 * TAU || value == 0.0 {
                FreqUnit::MHz
            } else {
                FreqUnit::KHz
            };
            (unit.suffix(), unit.to_angular())
        }
        Kind::Time => ("us", 1e-6),
        Kind::Energy => ("uev", 1e-6 * E_CHARGE),
        Kind::Plain => ("", 1.0),
    };
    table.insert(
        key_for(base, suffix),
        Value::Float(exact_quote(value, factor)),
    );
}

fn put_unit(table: &mut Table, base: &str, value: f64, unit: FreqUnit) {
    table.insert(
        key_for(base, unit.suffix()),
        Value::Float(exact_quote(value, unit.to_angular())),
    );
}

/// Reads and validates a device config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<DeviceParams, ConfigError> {
    let text = read_config_text(path)?;
    DeviceParams::from_toml_str(&text)
}

pub fn read_config_text(path: impl AsRef<Path>) -> Result<String, ConfigError> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// SHA-256 of the raw config bytes, lower-case hex.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Microwave reflectivity `(1 − 2η)²` of a resonantly probed single-port cavity.
pub fn reflectivity(eta: f64) -> f64 {
    (1.0 - 2.0 * eta).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub eta_c: f64,
    pub eta_e: f64,
    pub eta_o: f64,
    /// `(1 − 2η_e)²`.
    pub eo_reflectivity: f64,
    /// `4g²/(κ_e κ_o)` once a pump-enhanced coupling is known.
    pub cooperativity: Option<f64>,
}

pub fn derived_quantities(p: &DeviceParams) -> DerivedQuantities {
    let eta_e = p.eo.efficiency();
    DerivedQuantities {
        eta_c: p.cqed.efficiency(),
        eta_e,
        eta_o: p.optical.efficiency(),
        eo_reflectivity: reflectivity(eta_e),
        cooperativity: None,
    }
}

/// Prepared qubit state of the two-branch readout model.
///
/// `E` leaves the cQED cavity at its bare frequency (⟨σ_z⟩ = −1); `G` detunes
/// it by the Lamb shift χ₀ (⟨σ_z⟩ = +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QubitState {
    G,
    E,
}

impl QubitState {
    pub fn sigma_z(self) -> f64 {
        match self {
            QubitState::G => 1.0,
            QubitState::E => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            QubitState::G => QubitState::E,
            QubitState::E => QubitState::G,
        }
    }

    pub fn label(self) -> char {
        match self {
            QubitState::G => 'g',
            QubitState::E => 'e',
        }
    }
}

impl fmt::Display for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for QubitState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "g" | "G" => Ok(QubitState::G),
            "e" | "E" => Ok(QubitState::E),
            other => Err(format!("unknown qubit state `{other}` (expected g or e)")),
        }
    }
}
