use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use super::weights::{check_grid, weight_function_windowed};
use super::{DetectionError, WeightFunction};
use crate::device::QubitState;

/// One noisy heterodyne record.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub index: u64,
    /// Ensemble seed; the shot draws from substream `index` of it.
    pub seed: u64,
    pub label: QubitState,
    pub dt: f64,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

/// State-error channels applied during synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    /// Energy relaxation time; `None` disables decay.
    pub t1: Option<f64>,
    /// Probability that a |g⟩ preparation is thermally excited.
    pub p_thermal: f64,
    /// Probability that the readout pulse flips either state at its start.
    pub p_readout_flip: f64,
}

impl ErrorModel {
    pub const NONE: ErrorModel = ErrorModel {
        t1: None,
        p_thermal: 0.0,
        p_readout_flip: 0.0,
    };

    fn validate(&self) -> Result<(), DetectionError> {
        for (name, p) in [
            ("thermal probability", self.p_thermal),
            ("readout flip probability", self.p_readout_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DetectionError::Invalid(format!(
                    "{name} {p} outside [0, 1]"
                )));
            }
        }
        if let Some(t1) = self.t1 {
            if !(t1 > 0.0) {
                return Err(DetectionError::Invalid(format!("T1 must be > 0, got {t1}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotConfig {
    pub dt: f64,
    /// Standard deviation of the integrated score under the unit-peak weight.
    pub sigma_det: f64,
    pub n_per_state: usize,
    pub seed: u64,
    pub errors: ErrorModel,
    /// Integration window in samples; the whole record when `None`.
    pub window: Option<Range<usize>>,
}

/// A scored shot without its time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredShot {
    pub index: u64,
    pub label: QubitState,
    pub score: f64,
    /// No flip or decay reached the integration window.
    pub clean: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub weight: WeightFunction,
    pub seed: u64,
    pub shots: Vec<ScoredShot>,
}

struct Plan<'a> {
    avg_g: &'a [Complex64],
    avg_e: &'a [Complex64],
    weight: WeightFunction,
    sigma_sample: f64,
    window_end: f64,
    cfg: &'a ShotConfig,
}

fn plan<'a>(
    avg_g: &'a [Complex64],
    avg_e: &'a [Complex64],
    cfg: &'a ShotConfig,
) -> Result<Plan<'a>, DetectionError> {
    check_grid(avg_g.len(), avg_e.len())?;
    if !(cfg.dt > 0.0) {
        return Err(DetectionError::Invalid(format!(
            "dt must be > 0, got {}",
            cfg.dt
        )));
    }
    if !(cfg.sigma_det >= 0.0 && cfg.sigma_det.is_finite()) {
        return Err(DetectionError::Invalid(format!(
            "sigma_det must be >= 0, got {}",
            cfg.sigma_det
        )));
    }
    if cfg.n_per_state == 0 {
        return Err(DetectionError::Invalid(
            "need at least one shot per state".into(),
        ));
    }
    cfg.errors.validate()?;
    let window = cfg.window.clone().unwrap_or(0..avg_g.len());
    let weight = weight_function_windowed(avg_g, avg_e, window.clone())?;
    // Var(score) = σ_s² dt² Σf²  ⇒  σ_s = σ_det / (dt √Σf²)
    let sigma_sample = cfg.sigma_det / (cfg.dt * weight.norm_sq().sqrt());
    Ok(Plan {
        avg_g,
        avg_e,
        weight,
        sigma_sample,
        window_end: window.end as f64 * cfg.dt,
        cfg,
    })
}

impl Plan<'_> {
    /// Generates shot `index`, feeding each (I, Q) sample to `sink`.
    /// Returns the prepared label and whether the shot stayed clean.
    fn run(&self, index: u64, mut sink: impl FnMut(usize, f64, f64)) -> (QubitState, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(index);
        let label = if index % 2 == 0 {
            QubitState::G
        } else {
            QubitState::E
        };
        let errs = &self.cfg.errors;
        let u_thermal: f64 = rng.random();
        let u_flip: f64 = rng.random();
        let decay_draw: f64 = rng.sample(Exp1);

        let mut actual = label;
        if label == QubitState::G && u_thermal < errs.p_thermal {
            actual = QubitState::E;
        }
        if u_flip < errs.p_readout_flip {
            actual = actual.flipped();
        }
        let t_decay = match (actual, errs.t1) {
            (QubitState::E, Some(t1)) => decay_draw * t1,
            _ => f64::INFINITY,
        };
        let clean = actual == label && t_decay >= self.window_end;

        let frame = Complex64::from_polar(self.sigma_sample, self.weight.theta);
        for k in 0..self.avg_g.len() {
            let t = k as f64 * self.cfg.dt;
            let env = if actual == QubitState::E && t < t_decay {
                self.avg_e[k]
            } else {
                self.avg_g[k]
            };
            let n_i: f64 = rng.sample(StandardNormal);
            let n_q: f64 = rng.sample(StandardNormal);
            // noise drawn in the weight frame, so a global phase rotates it too
            let noise = frame * Complex64::new(n_i, n_q);
            sink(k, env.re + noise.re, env.im + noise.im);
        }
        (label, clean)
    }

    fn n_total(&self) -> u64 {
        2 * self.cfg.n_per_state as u64
    }
}

/// Synthesizes `2 n_per_state` shots with alternating g/e labels.
pub fn simulate_shots(
    avg_g: &[Complex64],
    avg_e: &[Complex64],
    cfg: &ShotConfig,
) -> Result<Vec<ShotRecord>, DetectionError> {
    let plan = plan(avg_g, avg_e, cfg)?;
    let n = avg_g.len();
    Ok((0..plan.n_total())
        .into_par_iter()
        .map(|index| {
            let mut i = vec![0.0; n];
            let mut q = vec![0.0; n];
            let (label, _) = plan.run(index, |k, a, b| {
                i[k] = a;
                q[k] = b;
            });
            ShotRecord {
                index,
                seed: cfg.seed,
                label,
                dt: cfg.dt,
                i,
                q,
            }
        })
        .collect())
}

/// Same ensemble as [`simulate_shots`], scored on the fly without keeping
/// the time series. Scores are bitwise identical to scoring the records.
pub fn simulate_scores(
    avg_g: &[Complex64],
    avg_e: &[Complex64],
    cfg: &ShotConfig,
) -> Result<ScoreSet, DetectionError> {
    let plan = plan(avg_g, avg_e, cfg)?;
    let (c, s) = (plan.weight.theta.cos(), plan.weight.theta.sin());
    let f = &plan.weight.f;
    let shots = (0..plan.n_total())
        .into_par_iter()
        .map(|index| {
            let mut acc = 0.0;
            let (label, clean) = plan.run(index, |k, i, q| acc += f[k] * (i * c + q * s));
            ScoredShot {
                index,
                label,
                score: acc * cfg.dt,
                clean,
            }
        })
        .collect();
    Ok(ScoreSet {
        weight: plan.weight,
        seed: cfg.seed,
        shots,
    })
}

/// Scores grouped by prepared label: `(g, e)`.
pub fn split_by_label(shots: &[ScoredShot]) -> (Vec<f64>, Vec<f64>) {
    let mut g = Vec::with_capacity(shots.len() / 2 + 1);
    let mut e = Vec::with_capacity(shots.len() / 2 + 1);
    for s in shots {
        match s.label {
            QubitState::G => g.push(s.score),
            QubitState::E => e.push(s.score),
        }
    }
    (g, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::integrate_shot;

    fn envelopes(n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let g = (0..n)
            .map(|k| Complex64::new(0.1 * k as f64, 0.2))
            .collect();
        let e = (0..n)
            .map(|k| Complex64::new(0.1 * k as f64 + 1.0, -0.5 + 0.01 * k as f64))
            .collect();
        (g, e)
    }

    fn cfg(sigma: f64, n: usize) -> ShotConfig {
        ShotConfig {
            dt: 0.1,
            sigma_det: sigma,
            n_per_state: n,
            seed: 7,
            errors: ErrorModel::NONE,
            window: None,
        }
    }

    #[test]
    fn noiseless_shots_match_envelopes() {
        let (g, e) = envelopes(20);
        let shots = simulate_shots(&g, &e, &cfg(0.0, 3)).unwrap();
        assert_eq!(shots.len(), 6);
        for s in &shots {
            let env = if s.label == QubitState::G { &g } else { &e };
            for k in 0..env.len() {
                assert_eq!(s.i[k], env[k].re);
                assert_eq!(s.q[k], env[k].im);
            }
        }
        assert_eq!(shots[0].label, QubitState::G);
        assert_eq!(shots[1].label, QubitState::E);
    }

    #[test]
    fn streaming_scores_match_records() {
        let (g, e) = envelopes(30);
        let mut c = cfg(0.4, 50);
        c.errors = ErrorModel {
            t1: Some(1.0),
            p_thermal: 0.1,
            p_readout_flip: 0.05,
        };
        let records = simulate_shots(&g, &e, &c).unwrap();
        let set = simulate_scores(&g, &e, &c).unwrap();
        for (r, s) in records.iter().zip(&set.shots) {
            assert_eq!(r.label, s.label);
            assert_eq!(
                integrate_shot(r, &set.weight).unwrap().to_bits(),
                s.score.to_bits()
            );
        }
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let (g, e) = envelopes(16);
        let a = simulate_shots(&g, &e, &cfg(1.0, 20)).unwrap();
        let b = simulate_shots(&g, &e, &cfg(1.0, 20)).unwrap();
        assert_eq!(a, b);
        let mut other = cfg(1.0, 20);
        other.seed = 8;
        assert_ne!(a, simulate_shots(&g, &e, &other).unwrap());
    }

    #[test]
    fn score_variance_matches_configuration() {
        let (g, e) = envelopes(40);
        let sigma = 0.5f64.sqrt();
        let set = simulate_scores(&g, &e, &cfg(sigma, 15000)).unwrap();
        let (sg, _) = split_by_label(&set.shots);
        let n = sg.len() as f64;
        let mean = sg.iter().sum::<f64>() / n;
        let var = sg.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 0.5 - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let (g, e) = envelopes(8);
        let mut c = cfg(1.0, 2);
        c.errors.p_thermal = 1.5;
        assert!(matches!(
            simulate_shots(&g, &e, &c),
            Err(DetectionError::Invalid(_))
        ));
    }
}
