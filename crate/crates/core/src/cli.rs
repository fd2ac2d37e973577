//! Batch front end: `simulate`, `shots`, `budget` and `replay`.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 numeric, 5 I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use crate::budget::{run_sweep, BudgetModel, BudgetSettings, Sweep};
use crate::detection::{
    assignment_fidelity, empirical_overlap_error, fit_double_gaussian, quantum_efficiency,
    simulate_scores, snr_for_overlap, split_by_label, weight_function_windowed, DoubleGaussianFit,
    ErrorModel, FidelityReport, ScoreSet, ShotConfig, WeightFunction,
};
use crate::device::{config_hash, ConfigError, DeviceParams, QubitState};
use crate::dynamics::{readout_scenario, ScenarioOptions, ScenarioTrace, Scheme};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_table, Format, Header, Invocation, RunManifest, Table};

#[derive(Debug, Parser)]
#[command(
    name = "eoreadout",
    version,
    about = "Electro-optic qubit readout simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Averaged output traces for the prepared qubit states.
    Simulate(SimulateArgs),
    /// Single-shot ensemble, discrimination and fidelity report.
    Shots(ShotsArgs),
    /// Coherence and fidelity predictions over a parameter sweep.
    Budget(BudgetArgs),
    /// Re-runs the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scheme: Scheme,
    /// Only this state; both when omitted.
    #[arg(long)]
    state: Option<QubitState>,
}

#[derive(Debug, Args)]
struct ShotsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scheme: Scheme,
    /// Shots per prepared state.
    #[arg(long, default_value_t = 15000)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    #[command(flatten)]
    common: Common,
    /// `var:start:stop:steps` with var in rep_rate (Hz), power (W),
    /// temperature (K) or cooperativity.
    #[arg(long, default_value = "rep_rate:0:200:21")]
    sweep: String,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// The `[readout]` config section. Every key is optional.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSettings {
    /// Score separation over width; the scheme preset when absent.
    pub snr: Option<f64>,
    pub sqrt_n_meas: Option<f64>,
    pub t1_us: f64,
    pub p_thermal: f64,
    pub p_readout_flip: f64,
    pub record_us: f64,
    pub sample_ns: f64,
    pub window_start_us: Option<f64>,
    pub window_stop_us: Option<f64>,
    pub histogram_bins: usize,
}

impl Default for ReadoutSettings {
    fn default() -> Self {
        ReadoutSettings {
            snr: None,
            sqrt_n_meas: None,
            t1_us: 33.0,
            p_thermal: 0.015,
            p_readout_flip: 0.0,
            record_us: 3.0,
            sample_ns: 10.0,
            window_start_us: None,
            window_stop_us: None,
            histogram_bins: 100,
        }
    }
}

impl ReadoutSettings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let bad = |msg: String| {
            Error::Config(ConfigError::BadValue {
                field: "readout".into(),
                msg,
            })
        };
        let table: toml::Table = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        match table.get("readout") {
            None => Ok(Self::default()),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| bad(e.to_string())),
        }
    }
}

/// Score SNR |Δμ|/σ per scheme: a negligible overlap for microwave readout,
/// 2 % overlap error for microwave-to-optical and 7 % for all-optical.
pub fn snr_preset(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::MwMw => 14.0,
        Scheme::MwOpt => snr_for_overlap(0.02),
        Scheme::OptOpt => snr_for_overlap(0.07),
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<String> {
    let (inv, out) = match cmd {
        Command::Simulate(a) => (
            Invocation {
                subcommand: "simulate".into(),
                config: a.common.config,
                format: a.common.format,
                scheme: Some(a.scheme.tag().into()),
                state: a.state.map(|s| s.to_string()),
                shots: None,
                seed: None,
                sweep: None,
            },
            a.common.out,
        ),
        Command::Shots(a) => (
            Invocation {
                subcommand: "shots".into(),
                config: a.common.config,
                format: a.common.format,
                scheme: Some(a.scheme.tag().into()),
                state: None,
                shots: Some(a.shots),
                seed: Some(a.seed),
                sweep: None,
            },
            a.common.out,
        ),
        Command::Budget(a) => (
            Invocation {
                subcommand: "budget".into(),
                config: a.common.config,
                format: a.common.format,
                scheme: None,
                state: None,
                shots: None,
                seed: None,
                sweep: Some(a.sweep),
            },
            a.common.out,
        ),
        Command::Replay(a) => {
            let m = RunManifest::read(&a.manifest)?;
            let text = read_bytes(&m.invocation.config)?;
            if config_hash(&text) != m.config_hash {
                return Err(Error::Config(ConfigError::BadValue {
                    field: m.invocation.config.display().to_string(),
                    msg: "config changed since the manifest was written".into(),
                }));
            }
            (m.invocation, a.out)
        }
    };
    let mut inv = inv;
    // absolute, so a manifest can be replayed from any directory
    inv.config = std::fs::canonicalize(&inv.config).map_err(|source| {
        Error::Config(ConfigError::Read {
            path: inv.config.display().to_string(),
            source,
        })
    })?;
    run_invocation(&inv, &out)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| {
        Error::Config(ConfigError::Read {
            path: path.display().to_string(),
            source,
        })
    })
}

struct Context {
    params: DeviceParams,
    text: String,
    header: Header,
    out: PathBuf,
    format: Format,
}

impl Context {
    fn table(&self, stem: &str, notes: Vec<(String, String)>, t: &Table) -> Result<PathBuf> {
        let header = Header {
            notes,
            ..self.header.clone()
        };
        write_table(&self.out, stem, self.format, &header, t)
    }

    fn text_file(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        let full = format!(
            "manifest = {}\nconfig = {}\n{body}",
            self.header.manifest_id, self.header.config_hash
        );
        std::fs::write(&path, full).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Executes a recorded invocation into `out`; returns a printable summary.
pub fn run_invocation(inv: &Invocation, out: &Path) -> Result<String> {
    let bytes = read_bytes(&inv.config)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Config(ConfigError::Parse("config is not UTF-8".into())))?;
    let params = DeviceParams::from_toml_str(&text)?;
    let hash = config_hash(&bytes);
    let id = RunManifest::id_for(&hash, inv);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ctx = Context {
        params,
        text,
        header: Header {
            manifest_id: id.clone(),
            config_hash: hash.clone(),
            notes: Vec::new(),
        },
        out: out.to_path_buf(),
        format: inv.format,
    };
    let scheme = inv
        .scheme
        .as_deref()
        .map(|s| s.parse::<Scheme>().map_err(Error::Usage))
        .transpose()?;
    let need_scheme = || scheme.ok_or_else(|| Error::Usage("missing scheme".into()));
    let (outputs, summary) = match inv.subcommand.as_str() {
        "simulate" => {
            let state = inv
                .state
                .as_deref()
                .map(|s| s.parse::<QubitState>().map_err(Error::Usage))
                .transpose()?;
            cmd_simulate(&ctx, need_scheme()?, state)?
        }
        "shots" => {
            let n = inv
                .shots
                .ok_or_else(|| Error::Usage("missing shot count".into()))?;
            cmd_shots(&ctx, need_scheme()?, n, inv.seed.unwrap_or(0))?
        }
        "budget" => {
            let sweep = inv
                .sweep
                .as_deref()
                .ok_or_else(|| Error::Usage("missing sweep".into()))?;
            cmd_budget(&ctx, sweep)?
        }
        other => return Err(Error::Usage(format!("unknown subcommand `{other}`"))),
    };
    let manifest = RunManifest {
        id,
        config_hash: hash,
        out_dir: out.to_path_buf(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        invocation: inv.clone(),
    };
    let mpath = manifest.write(out)?;
    let mut s = summary;
    let _ = writeln!(s, "manifest: {}", mpath.display());
    Ok(s)
}

fn scenario_options(
    scheme: Scheme,
    p: &DeviceParams,
    r: &ReadoutSettings,
) -> Result<ScenarioOptions> {
    if !(r.record_us > 0.0 && r.sample_ns > 0.0) {
        return Err(Error::Usage("record_us and sample_ns must be > 0".into()));
    }
    let mut opts = ScenarioOptions::defaults(scheme, p);
    opts.record = r.record_us * 1e-6;
    opts.sample_dt = r.sample_ns * 1e-9;
    opts.tone.duration = opts.record + 2.0 * opts.tone.rise;
    if let Some(n) = r.sqrt_n_meas {
        opts.tone.sqrt_n_meas = n;
    }
    Ok(opts)
}

fn both_traces(
    scheme: Scheme,
    p: &DeviceParams,
    opts: &ScenarioOptions,
) -> Result<(ScenarioTrace, ScenarioTrace)> {
    let (g, e) = rayon::join(
        || readout_scenario(scheme, p, QubitState::G, opts),
        || readout_scenario(scheme, p, QubitState::E, opts),
    );
    Ok((g?, e?))
}

fn cmd_simulate(
    ctx: &Context,
    scheme: Scheme,
    state: Option<QubitState>,
) -> Result<(Vec<PathBuf>, String)> {
    let r = ReadoutSettings::from_toml_str(&ctx.text)?;
    let opts = scenario_options(scheme, &ctx.params, &r)?;
    let states = match state {
        Some(s) => vec![s],
        None => vec![QubitState::G, QubitState::E],
    };
    let traces: Vec<ScenarioTrace> = states
        .iter()
        .map(|&s| readout_scenario(scheme, &ctx.params, s, &opts))
        .collect::<std::result::Result<_, _>>()?;
    let mut outputs = Vec::new();
    let mut summary = String::new();
    let mut steady = format!("scheme = {scheme}\n");
    for tr in &traces {
        let mut t = Table::new(["time_s", "re", "im", "power"]);
        for (k, z) in tr.envelope.iter().enumerate() {
            t.push_row(&[tr.times[k], z.re, z.im, z.norm_sqr()]);
        }
        let notes = vec![
            ("scheme".into(), scheme.tag().into()),
            ("state".into(), tr.state.to_string()),
            ("steady_power".into(), fmt_f64(tr.steady_power())),
            ("background_power".into(), fmt_f64(tr.background)),
        ];
        outputs.push(ctx.table(&format!("trace_{}", tr.state), notes, &t)?);
        let _ = writeln!(
            steady,
            "steady_power_{} = {}",
            tr.state,
            fmt_f64(tr.steady_power())
        );
        let _ = writeln!(
            steady,
            "background_power_{} = {}",
            tr.state,
            fmt_f64(tr.background)
        );
        let _ = writeln!(
            steady,
            "drive_amplitude_{} = {}",
            tr.state,
            fmt_f64(tr.drive_amplitude)
        );
        let _ = writeln!(
            summary,
            "{scheme} |{}>: steady power {:.6e}, background {:.6e}",
            tr.state,
            tr.steady_power(),
            tr.background
        );
    }
    outputs.push(ctx.text_file("steady.txt", &steady)?);
    for p in &outputs {
        let _ = writeln!(summary, "wrote {}", p.display());
    }
    Ok((outputs, summary))
}

/// Noiseless score separation under `w`.
fn score_separation(g: &[Complex64], e: &[Complex64], w: &WeightFunction, dt: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, -w.theta);
    w.f.iter()
        .zip(g.iter().zip(e))
        .map(|(f, (a, b))| f * (rot * (b - a)).re)
        .sum::<f64>()
        * dt
}

fn sample_window(r: &ReadoutSettings, n: usize, dt: f64) -> Result<Option<std::ops::Range<usize>>> {
    if r.window_start_us.is_none() && r.window_stop_us.is_none() {
        return Ok(None);
    }
    let to_idx = |us: f64| (us * 1e-6 / dt).round().max(0.0) as usize;
    let a = r.window_start_us.map_or(0, to_idx);
    let b = r.window_stop_us.map_or(n, to_idx).min(n);
    if a >= b {
        return Err(Error::Usage(format!(
            "integration window {a}..{b} is empty"
        )));
    }
    Ok(Some(a..b))
}

/// Outcome of the full shot pipeline.
#[derive(Debug, Clone)]
pub struct ShotsOutcome {
    pub scores: ScoreSet,
    pub fit: DoubleGaussianFit,
    pub report: FidelityReport,
    pub sigma_det: f64,
    pub snr_target: f64,
    pub eps_ol_empirical: Option<(f64, f64)>,
    pub eta_det: Option<f64>,
    pub sqrt_n_meas: f64,
}

/// Scenario → shots → weights → scores → fit → fidelity.
pub fn shots_pipeline(
    scheme: Scheme,
    p: &DeviceParams,
    r: &ReadoutSettings,
    n_per_state: usize,
    seed: u64,
) -> Result<ShotsOutcome> {
    if n_per_state < 2 {
        return Err(Error::Usage(format!(
            "need at least 2 shots per state, got {n_per_state}"
        )));
    }
    let opts = scenario_options(scheme, p, r)?;
    let (tg, te) = both_traces(scheme, p, &opts)?;
    let dt = opts.sample_dt;
    let window = sample_window(r, tg.envelope.len(), dt)?;
    let w = weight_function_windowed(
        &tg.envelope,
        &te.envelope,
        window.clone().unwrap_or(0..tg.envelope.len()),
    )?;
    let snr_target = r.snr.unwrap_or_else(|| snr_preset(scheme));
    if !(snr_target > 0.0) {
        return Err(Error::Usage(format!("snr must be > 0, got {snr_target}")));
    }
    let sigma_det = score_separation(&tg.envelope, &te.envelope, &w, dt) / snr_target;
    let cfg = ShotConfig {
        dt,
        sigma_det,
        n_per_state,
        seed,
        errors: ErrorModel {
            t1: Some(r.t1_us * 1e-6),
            p_thermal: r.p_thermal,
            p_readout_flip: r.p_readout_flip,
        },
        window: window.clone(),
    };
    let scores = simulate_scores(&tg.envelope, &te.envelope, &cfg)?;
    let all: Vec<f64> = scores.shots.iter().map(|s| s.score).collect();
    let labels: Vec<QubitState> = scores.shots.iter().map(|s| s.label).collect();
    let fit = fit_double_gaussian(&all, Some(&labels))?;
    let (sg, se) = split_by_label(&scores.shots);
    let span = window.unwrap_or(0..tg.envelope.len());
    let report = assignment_fidelity(&sg, &se, &fit)?.with_integration_time(span.len() as f64 * dt);
    Ok(ShotsOutcome {
        eps_ol_empirical: empirical_overlap_error(&scores.shots, &fit).ok(),
        eta_det: quantum_efficiency(&fit, opts.tone.sqrt_n_meas).ok(),
        sqrt_n_meas: opts.tone.sqrt_n_meas,
        scores,
        fit,
        report,
        sigma_det,
        snr_target,
    })
}

fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn histogram(o: &ShotsOutcome, bins: usize) -> Table {
    let scores: Vec<f64> = o.scores.shots.iter().map(|s| s.score).collect();
    let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![[0.0f64; 2]; bins];
    for s in &o.scores.shots {
        let k = (((s.score - lo) / width) as usize).min(bins - 1);
        counts[k][s.label as usize] += 1.0;
    }
    let n = scores.len() as f64;
    let f = &o.fit;
    let mut t = Table::new(["center", "count_g", "count_e", "fit_g", "fit_e"]);
    for (k, c) in counts.iter().enumerate() {
        let x = lo + (k as f64 + 0.5) * width;
        t.push_row(&[
            x,
            c[0],
            c[1],
            n * width * f.w_g * gaussian_pdf(x, f.mu_g, f.sigma_g),
            n * width * f.w_e * gaussian_pdf(x, f.mu_e, f.sigma_e),
        ]);
    }
    t
}

fn report_text(scheme: Scheme, n: usize, seed: u64, o: &ShotsOutcome) -> String {
    let f = &o.fit;
    let r = &o.report;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("scheme", scheme.tag().into());
    kv("shots_per_state", n.to_string());
    kv("seed", seed.to_string());
    kv("snr_target", fmt_f64(o.snr_target));
    kv("sigma_det", fmt_f64(o.sigma_det));
    kv("theta", fmt_f64(o.scores.weight.theta));
    kv("mu_g", fmt_f64(f.mu_g));
    kv("mu_e", fmt_f64(f.mu_e));
    kv("sigma_g", fmt_f64(f.sigma_g));
    kv("sigma_e", fmt_f64(f.sigma_e));
    kv("w_g", fmt_f64(f.w_g));
    kv("w_e", fmt_f64(f.w_e));
    kv("threshold", fmt_f64(f.threshold));
    kv("em_iterations", f.iterations.to_string());
    kv("degenerate", f.degenerate.to_string());
    kv("underpowered", f.underpowered.to_string());
    kv("fidelity", fmt_f64(r.fidelity));
    kv("p_e_given_g", fmt_f64(r.p_e_given_g));
    kv("p_g_given_e", fmt_f64(r.p_g_given_e));
    kv("eps_g", fmt_f64(r.eps_g));
    kv("eps_e", fmt_f64(r.eps_e));
    kv("eps_ol", fmt_f64(r.eps_ol));
    if let Some((e, se)) = o.eps_ol_empirical {
        kv("eps_ol_empirical", fmt_f64(e));
        kv("eps_ol_empirical_se", fmt_f64(se));
    }
    if let Some(t) = r.integration_time {
        kv("integration_time_s", fmt_f64(t));
    }
    if let Some(eta) = o.eta_det {
        kv("eta_det", fmt_f64(eta));
    }
    s
}

fn cmd_shots(ctx: &Context, scheme: Scheme, n: usize, seed: u64) -> Result<(Vec<PathBuf>, String)> {
    let r = ReadoutSettings::from_toml_str(&ctx.text)?;
    let o = shots_pipeline(scheme, &ctx.params, &r, n, seed)?;
    let mut t = Table::new(["index", "label", "score", "clean"]);
    for s in &o.scores.shots {
        t.push_row(&[
            s.index as f64,
            s.label as usize as f64,
            s.score,
            if s.clean { 1.0 } else { 0.0 },
        ]);
    }
    let notes = vec![
        ("scheme".into(), scheme.tag().into()),
        ("seed".into(), seed.to_string()),
        ("label".into(), "0 = g, 1 = e".into()),
    ];
    let mut outputs = vec![ctx.table("scores", notes.clone(), &t)?];
    outputs.push(ctx.table("histogram", notes, &histogram(&o, r.histogram_bins))?);
    let report = report_text(scheme, n, seed, &o);
    outputs.push(ctx.text_file("report.txt", &report)?);
    let mut summary = report;
    if o.fit.underpowered {
        let _ = writeln!(
            summary,
            "warning: only {} scores; the fit is not statistically meaningful",
            o.fit.n
        );
    }
    for p in &outputs {
        let _ = writeln!(summary, "wrote {}", p.display());
    }
    Ok((outputs, summary))
}

fn cmd_budget(ctx: &Context, sweep: &str) -> Result<(Vec<PathBuf>, String)> {
    let sweep: Sweep = sweep.parse()?;
    let settings = BudgetSettings::from_toml_str(&ctx.text)?;
    let model = BudgetModel::new(&ctx.params, &settings)?;
    let rows = run_sweep(&model, &sweep)?;
    let mut t = Table::new([
        "value",
        "rep_rate_hz",
        "p_avg_w",
        "t_mxc_k",
        "t_eo_k",
        "t_cavity_k",
        "t_qubit_k",
        "n_th_cavity",
        "p_thermal",
        "gamma_qp",
        "gamma_purcell",
        "gamma_rad",
        "t1_s",
        "gamma_phi",
        "t2_s",
        "fidelity",
        "qnd",
        "cooperativity",
        "eta_eo",
    ]);
    for (v, b) in sweep.values().iter().zip(&rows) {
        let c = &b.coherence;
        t.push_row(&[
            *v,
            b.rep_rate,
            b.thermal.p_avg,
            b.thermal.t_mxc,
            b.thermal.t_eo,
            b.thermal.t_cavity,
            b.thermal.t_qubit,
            b.n_th_cavity,
            b.p_thermal,
            c.gamma_qp,
            c.gamma_purcell,
            c.gamma_rad,
            c.t1,
            c.gamma_phi,
            c.t2,
            b.fidelity,
            b.qnd,
            b.cooperativity,
            b.eta_eo,
        ]);
    }
    let notes = vec![("sweep".into(), sweep.var.tag().into())];
    let path = ctx.table("budget", notes, &t)?;
    let summary = format!(
        "{} rows over {}\nwrote {}\n",
        rows.len(),
        sweep.var,
        path.display()
    );
    Ok((vec![path], summary))
}
