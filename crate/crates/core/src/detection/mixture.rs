use std::f64::consts::PI;

use super::DetectionError;
use crate::device::QubitState;

/// Below this many scores a fit is reported but flagged as underpowered.
pub const MIN_FIT_SCORES: usize = 100;
// Skewed components (decay tails) make EM crawl for a few thousand steps.
const MAX_ITER: usize = 5000;
const LL_TOL: f64 = 1e-9;

/// Single-Gaussian statistics of one labeled class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassFit {
    pub mean: f64,
    pub sigma: f64,
    pub n: usize,
}

impl ClassFit {
    pub fn from_scores(x: &[f64]) -> Option<ClassFit> {
        if x.len() < 2 {
            return None;
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Some(ClassFit {
            mean,
            sigma: var.sqrt(),
            n: x.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleGaussianFit {
    pub mu_g: f64,
    pub mu_e: f64,
    pub sigma_g: f64,
    pub sigma_e: f64,
    pub w_g: f64,
    pub w_e: f64,
    pub threshold: f64,
    /// Mean log-likelihood per score at convergence.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// The components overlap: |μ_e − μ_g| below the pooled σ.
    pub degenerate: bool,
    /// Fewer than [`MIN_FIT_SCORES`] scores; statistics are not meaningful.
    pub underpowered: bool,
    /// Per-class fits `(g, e)` when labels were supplied.
    pub class_fits: Option<(ClassFit, ClassFit)>,
    pub n: usize,
}

impl DoubleGaussianFit {
    pub fn separation(&self) -> f64 {
        (self.mu_e - self.mu_g).abs()
    }

    /// RMS of the two component widths.
    pub fn pooled_sigma(&self) -> f64 {
        (0.5 * (self.sigma_g.powi(2) + self.sigma_e.powi(2))).sqrt()
    }

    pub fn snr(&self) -> f64 {
        self.separation() / self.pooled_sigma()
    }

    /// State assignment; a score exactly on the threshold goes to |g⟩.
    pub fn assign(&self, score: f64) -> QubitState {
        let g_side = if self.mu_g <= self.mu_e {
            score <= self.threshold
        } else {
            score >= self.threshold
        };
        if g_side {
            QubitState::G
        } else {
            QubitState::E
        }
    }
}

fn log_normal(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * ((x - mu).powi(2) / var + (2.0 * PI * var).ln())
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Two-component Gaussian mixture fitted by expectation-maximization,
/// initialized from a median split.
pub fn fit_double_gaussian(
    scores: &[f64],
    labels: Option<&[QubitState]>,
) -> Result<DoubleGaussianFit, DetectionError> {
    const MIN: usize = 4;
    if scores.len() < MIN {
        return Err(DetectionError::TooFewPoints {
            needed: MIN,
            got: scores.len(),
        });
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(DetectionError::Invalid("scores must be finite".into()));
    }
    if let Some(l) = labels {
        if l.len() != scores.len() {
            return Err(DetectionError::GridMismatch {
                expected: scores.len(),
                got: l.len(),
            });
        }
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let total_var = scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(total_var > 0.0) {
        return Err(DetectionError::DegenerateFit(
            "all scores are identical".into(),
        ));
    }
    let var_floor = 1e-12 * total_var;

    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let half = sorted.len() / 2;
    let moments = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
        (m, v.max(var_floor))
    };
    let (mut mu0, mut v0) = moments(&sorted[..half]);
    let (mut mu1, mut v1) = moments(&sorted[half..]);
    let mut w0: f64 = 0.5;

    let mut resp = vec![0.0; scores.len()];
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_ITER {
        // E-step; resp holds the posterior of component 1
        let mut ll = 0.0;
        for (r, &x) in resp.iter_mut().zip(scores) {
            let a = w0.ln() + log_normal(x, mu0, v0);
            let b = (1.0 - w0).ln() + log_normal(x, mu1, v1);
            let tot = log_add(a, b);
            ll += tot;
            *r = (b - tot).exp();
        }
        let ll = ll / n;
        let done = trace
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() < LL_TOL);
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
        // M-step
        let n1: f64 = resp.iter().sum();
        let n0 = n - n1;
        if n0 <= 0.0 || n1 <= 0.0 {
            return Err(DetectionError::DegenerateFit(
                "one mixture component lost all weight".into(),
            ));
        }
        mu0 = scores
            .iter()
            .zip(&resp)
            .map(|(x, r)| (1.0 - r) * x)
            .sum::<f64>()
            / n0;
        mu1 = scores.iter().zip(&resp).map(|(x, r)| r * x).sum::<f64>() / n1;
        v0 = (scores
            .iter()
            .zip(&resp)
            .map(|(x, r)| (1.0 - r) * (x - mu0).powi(2))
            .sum::<f64>()
            / n0)
            .max(var_floor);
        v1 = (scores
            .iter()
            .zip(&resp)
            .map(|(x, r)| r * (x - mu1).powi(2))
            .sum::<f64>()
            / n1)
            .max(var_floor);
        w0 = n0 / n;
    }
    // Overlapping components leave the likelihood nearly flat, so EM crawls;
    // that case is reported as a degenerate fit rather than a failure.
    let overlapping = (mu1 - mu0).abs() < (0.5 * (v0 + v1)).sqrt();
    if !converged && !overlapping {
        return Err(DetectionError::non_convergence("mixture EM", trace));
    }

    let class_fits = labels.and_then(|l| {
        let pick = |s: QubitState| -> Vec<f64> {
            scores
                .iter()
                .zip(l)
                .filter(|(_, lab)| **lab == s)
                .map(|(x, _)| *x)
                .collect()
        };
        Some((
            ClassFit::from_scores(&pick(QubitState::G))?,
            ClassFit::from_scores(&pick(QubitState::E))?,
        ))
    });

    // Component 0 has the lower mean. It is |g⟩ unless the labeled classes
    // say the |g⟩ class sits higher.
    let reversed = class_fits.is_some_and(|(g, e)| g.mean > e.mean);
    let (g, e) = if reversed {
        ((mu1, v1, 1.0 - w0), (mu0, v0, w0))
    } else {
        ((mu0, v0, w0), (mu1, v1, 1.0 - w0))
    };

    let threshold = equal_likelihood_point(g, e);
    let sigma_g = g.1.sqrt();
    let sigma_e = e.1.sqrt();
    let pooled = (0.5 * (g.1 + e.1)).sqrt();
    Ok(DoubleGaussianFit {
        mu_g: g.0,
        mu_e: e.0,
        sigma_g,
        sigma_e,
        w_g: g.2,
        w_e: e.2,
        threshold,
        log_likelihood: *trace.last().expect("at least one iteration"),
        iterations: trace.len(),
        degenerate: (e.0 - g.0).abs() < pooled,
        underpowered: scores.len() < MIN_FIT_SCORES,
        class_fits,
        n: scores.len(),
    })
}

/// Point between the means where the weighted component densities are equal;
/// the midpoint when they do not cross there.
fn equal_likelihood_point(g: (f64, f64, f64), e: (f64, f64, f64)) -> f64 {
    let h = |x: f64| (g.2.ln() + log_normal(x, g.0, g.1)) - (e.2.ln() + log_normal(x, e.0, e.1));
    let (mut a, mut b) = (g.0, e.0);
    let (ha, hb) = (h(a), h(b));
    if !(ha > 0.0 && hb < 0.0) {
        return 0.5 * (g.0 + e.0);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if h(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn mixture(n: usize, seed: u64) -> (Vec<f64>, Vec<QubitState>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n);
        for k in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            if k % 2 == 0 {
                x.push(z);
                l.push(QubitState::G);
            } else {
                x.push(5.0 + z);
                l.push(QubitState::E);
            }
        }
        (x, l)
    }

    #[test]
    fn recovers_synthetic_mixture() {
        let (x, l) = mixture(20_000, 3);
        let fit = fit_double_gaussian(&x, Some(&l)).unwrap();
        assert!(fit.mu_g.abs() < 0.05);
        assert!((fit.mu_e - 5.0).abs() < 0.05);
        assert!((fit.sigma_g - 1.0).abs() < 0.05);
        assert!((fit.sigma_e - 1.0).abs() < 0.05);
        assert!((fit.w_g + fit.w_e - 1.0).abs() < 1e-12);
        assert!((fit.threshold - 2.5).abs() < 0.1);
        assert!(!fit.degenerate && !fit.underpowered);
        let (g, e) = fit.class_fits.unwrap();
        assert!(g.mean < e.mean);
    }

    #[test]
    fn single_gaussian_is_flagged_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
        let fit = fit_double_gaussian(&x, None).unwrap();
        assert!(fit.degenerate);
    }

    #[test]
    fn reversed_labels_swap_components() {
        let (x, l) = mixture(2000, 5);
        let flipped: Vec<_> = l.iter().map(|s| s.flipped()).collect();
        let fit = fit_double_gaussian(&x, Some(&flipped)).unwrap();
        assert!(fit.mu_g > fit.mu_e);
        assert_eq!(fit.assign(5.0), QubitState::G);
        assert_eq!(fit.assign(0.0), QubitState::E);
    }

    #[test]
    fn ties_go_to_ground() {
        let (x, _) = mixture(2000, 9);
        let fit = fit_double_gaussian(&x, None).unwrap();
        assert_eq!(fit.assign(fit.threshold), QubitState::G);
    }

    #[test]
    fn too_few_and_constant_inputs() {
        assert!(matches!(
            fit_double_gaussian(&[1.0, 2.0], None),
            Err(DetectionError::TooFewPoints { .. })
        ));
        assert!(matches!(
            fit_double_gaussian(&[1.0; 200], None),
            Err(DetectionError::DegenerateFit(_))
        ));
        let fit = fit_double_gaussian(&[0.0, 0.1, 5.0, 5.1], None).unwrap();
        assert!(fit.underpowered);
    }
}
