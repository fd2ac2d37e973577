use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::{erfc, erfc_inv};

use super::{DetectionError, DoubleGaussianFit, ScoredShot};
use crate::constants::SIGMA0_SQ;
use crate::device::QubitState;

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub p_e_given_g: f64,
    pub p_g_given_e: f64,
    /// Ground-state error, the misassignment rate of |g⟩ preparations.
    pub eps_g: f64,
    /// Excited-state error, the misassignment rate of |e⟩ preparations.
    pub eps_e: f64,
    /// Analytic overlap error of the fitted components.
    pub eps_ol: f64,
    pub integration_time: Option<f64>,
    pub n_g: usize,
    pub n_e: usize,
}

impl FidelityReport {
    pub fn with_integration_time(mut self, t: f64) -> Self {
        self.integration_time = Some(t);
        self
    }
}

/// `½ erfc(|Δμ| / (2√2 σ))`.
pub fn overlap_error(separation: f64, sigma: f64) -> f64 {
    0.5 * erfc(separation.abs() / (2.0 * std::f64::consts::SQRT_2 * sigma))
}

/// Separation-to-width ratio |Δμ|/σ giving overlap error `eps`.
pub fn snr_for_overlap(eps: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * erfc_inv(2.0 * eps)
}

/// Threshold counting at the fit's threshold. The |g⟩ side is the side of the
/// lower class mean, unless that assigns worse than chance; a threshold left
/// outside the data by a poor fit would otherwise report F < ½. A score on
/// the threshold counts as |g⟩.
pub fn assignment_fidelity(
    scores_g: &[f64],
    scores_e: &[f64],
    fit: &DoubleGaussianFit,
) -> Result<FidelityReport, DetectionError> {
    if scores_g.is_empty() || scores_e.is_empty() {
        return Err(DetectionError::Invalid(
            "both classes need at least one score".into(),
        ));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let errors = |g_low: bool| {
        let is_g = |x: f64| {
            if g_low {
                x <= fit.threshold
            } else {
                x >= fit.threshold
            }
        };
        let e_g = scores_g.iter().filter(|&&x| !is_g(x)).count() as f64 / scores_g.len() as f64;
        let g_e = scores_e.iter().filter(|&&x| is_g(x)).count() as f64 / scores_e.len() as f64;
        (e_g, g_e)
    };
    let g_low = mean(scores_g) <= mean(scores_e);
    let (mut p_e_given_g, mut p_g_given_e) = errors(g_low);
    if p_e_given_g + p_g_given_e > 1.0 {
        let flipped = errors(!g_low);
        if flipped.0 + flipped.1 < p_e_given_g + p_g_given_e {
            (p_e_given_g, p_g_given_e) = flipped;
        }
    }
    Ok(FidelityReport {
        fidelity: 1.0 - 0.5 * (p_e_given_g + p_g_given_e),
        p_e_given_g,
        p_g_given_e,
        eps_g: p_e_given_g,
        eps_e: p_g_given_e,
        eps_ol: overlap_error(fit.separation(), fit.pooled_sigma()),
        integration_time: None,
        n_g: scores_g.len(),
        n_e: scores_e.len(),
    })
}

/// Misassignment rate restricted to clean shots, averaged over the two
/// prepared states, with its binomial standard error. Estimates the overlap
/// error free of decay and thermal events.
pub fn empirical_overlap_error(
    shots: &[ScoredShot],
    fit: &DoubleGaussianFit,
) -> Result<(f64, f64), DetectionError> {
    let mut wrong = [0usize; 2];
    let mut total = [0usize; 2];
    for s in shots.iter().filter(|s| s.clean) {
        let k = s.label as usize;
        total[k] += 1;
        if fit.assign(s.score) != s.label {
            wrong[k] += 1;
        }
    }
    if total.contains(&0) {
        return Err(DetectionError::Invalid(
            "need clean shots of both prepared states".into(),
        ));
    }
    let p = [0, 1].map(|k| wrong[k] as f64 / total[k] as f64);
    let eps = 0.5 * (p[0] + p[1]);
    let se = 0.5
        * (0..2)
            .map(|k| p[k] * (1.0 - p[k]) / total[k] as f64)
            .sum::<f64>()
            .sqrt();
    Ok((eps, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QndReport {
    pub q: f64,
    pub p_g2_g1: f64,
    pub p_e2_e1: f64,
    pub n_g1: usize,
    pub n_e1: usize,
}

/// Agreement of two consecutive assignments, averaged over the first outcome.
pub fn qnd_metric(
    first: &[QubitState],
    second: &[QubitState],
) -> Result<QndReport, DetectionError> {
    if first.is_empty() {
        return Err(DetectionError::Invalid("no measurements".into()));
    }
    if first.len() != second.len() {
        return Err(DetectionError::GridMismatch {
            expected: first.len(),
            got: second.len(),
        });
    }
    let mut counts = [[0usize; 2]; 2];
    for (a, b) in first.iter().zip(second) {
        counts[*a as usize][*b as usize] += 1;
    }
    let n_g1 = counts[0][0] + counts[0][1];
    let n_e1 = counts[1][0] + counts[1][1];
    if n_g1 == 0 || n_e1 == 0 {
        return Err(DetectionError::Invalid(
            "first measurement must contain both outcomes".into(),
        ));
    }
    let p_g2_g1 = counts[0][0] as f64 / n_g1 as f64;
    let p_e2_e1 = counts[1][1] as f64 / n_e1 as f64;
    Ok(QndReport {
        q: 0.5 * (p_g2_g1 + p_e2_e1),
        p_g2_g1,
        p_e2_e1,
        n_g1,
        n_e1,
    })
}

/// Pairs of consecutive outcomes separated by `delay`, with alternating
/// preparations. The first outcome is exact; before the second, |e⟩ decays
/// with probability `1 − e^{-delay/T1}` and |g⟩ is thermally excited with
/// probability `p_thermal`.
pub fn simulate_consecutive(
    n_per_state: usize,
    delay: f64,
    t1: f64,
    p_thermal: f64,
    seed: u64,
) -> Result<(Vec<QubitState>, Vec<QubitState>), DetectionError> {
    if !(t1 > 0.0 && delay >= 0.0 && (0.0..=1.0).contains(&p_thermal)) {
        return Err(DetectionError::Invalid(format!(
            "need T1 > 0, delay >= 0 and p_thermal in [0, 1]; got {t1}, {delay}, {p_thermal}"
        )));
    }
    let p_decay = -(-delay / t1).exp_m1();
    let pairs: Vec<(QubitState, QubitState)> = (0..2 * n_per_state as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index);
            let first = if index % 2 == 0 {
                QubitState::G
            } else {
                QubitState::E
            };
            let u: f64 = rng.random();
            let p_change = match first {
                QubitState::G => p_thermal,
                QubitState::E => p_decay,
            };
            let second = if u < p_change { first.flipped() } else { first };
            (first, second)
        })
        .collect();
    Ok(pairs.into_iter().unzip())
}

/// `η = σ₀² / σ_det²`, with the fitted width rescaled so that the class
/// separation equals the readout amplitude √n_meas.
pub fn quantum_efficiency(
    fit: &DoubleGaussianFit,
    sqrt_n_meas: f64,
) -> Result<f64, DetectionError> {
    let sep = fit.separation();
    if !(sep > 0.0 && sqrt_n_meas > 0.0) {
        return Err(DetectionError::Invalid(
            "need a nonzero separation and readout amplitude".into(),
        ));
    }
    let sigma_det = fit.pooled_sigma() * sqrt_n_meas / sep;
    if !(sigma_det > 0.0) {
        return Err(DetectionError::Invalid(format!(
            "sigma_det must be > 0, got {sigma_det}"
        )));
    }
    Ok(SIGMA0_SQ / (sigma_det * sigma_det))
}
