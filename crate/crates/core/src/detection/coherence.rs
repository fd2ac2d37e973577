use nalgebra::{DMatrix, DVector, Matrix3};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::DetectionError;

/// `A e^{-t/T1} + B`, with a two-sided 95 % interval on T1.
#[derive(Debug, Clone, PartialEq)]
pub struct T1Fit {
    pub t1: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub t1_std_err: f64,
    pub ci: (f64, f64),
    pub rms_residual: f64,
}

/// `A e^{-t/T2*} cos(2πδt + φ) + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyFit {
    pub t2_star: f64,
    /// Oscillation frequency δ, Hz.
    pub detuning: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub rms_residual: f64,
    /// The sampling does not resolve the oscillation (fewer than four
    /// points per period).
    pub aliased: bool,
    pub iterations: usize,
}

const CONFIDENCE: f64 = 0.95;

fn check_inputs(t: &[f64], y: &[f64], min: usize) -> Result<(), DetectionError> {
    if t.len() != y.len() {
        return Err(DetectionError::GridMismatch {
            expected: t.len(),
            got: y.len(),
        });
    }
    if t.len() < min {
        return Err(DetectionError::TooFewPoints {
            needed: min,
            got: t.len(),
        });
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(DetectionError::Invalid("non-finite sample".into()));
    }
    Ok(())
}

fn spread(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

/// Least-squares `(A, B)` and residual sum of squares for a fixed T1.
fn t1_linear(t: &[f64], y: &[f64], t1: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let e: Vec<f64> = t.iter().map(|ti| (-ti / t1).exp()).collect();
    let (se, see) = (e.iter().sum::<f64>(), e.iter().map(|v| v * v).sum::<f64>());
    let sy: f64 = y.iter().sum();
    let sey: f64 = e.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * see - se * se;
    let (a, b) = if det.abs() > 1e-300 {
        ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
    } else {
        (0.0, sy / n)
    };
    let rss = e
        .iter()
        .zip(y)
        .map(|(ei, yi)| (yi - a * ei - b).powi(2))
        .sum();
    (a, b, rss)
}

/// Exponential-decay fit by variable projection: the linear parameters are
/// eliminated and the residual is minimized over log T1.
pub fn fit_t1(delays: &[f64], populations: &[f64]) -> Result<T1Fit, DetectionError> {
    check_inputs(delays, populations, 5)?;
    let (t, y) = (delays, populations);
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if spread(y) <= 1e-12 * scale {
        return Err(DetectionError::DegenerateFit(
            "populations are constant; T1 is unbounded".into(),
        ));
    }
    let t_min = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(DetectionError::Invalid(
            "delays must not all coincide".into(),
        ));
    }
    let rss = |lt: f64| t1_linear(t, y, lt.exp()).2;
    let (lo, hi) = ((span * 1e-3).ln(), (span * 1e3).ln());
    let n_scan = 400;
    let grid: Vec<f64> = (0..=n_scan)
        .map(|i| lo + (hi - lo) * i as f64 / n_scan as f64)
        .collect();
    let best = (0..=n_scan)
        .min_by(|&a, &b| rss(grid[a]).total_cmp(&rss(grid[b])))
        .expect("non-empty scan");
    if best == n_scan {
        return Err(DetectionError::DegenerateFit(
            "decay too slow to resolve; T1 is unbounded".into(),
        ));
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n_scan)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if rss(c) < rss(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let t1 = (0.5 * (a + b)).exp();
    let (amp, off, rss) = t1_linear(t, y, t1);

    // covariance of (A, B, T1) from the Gauss–Newton normal matrix
    let mut jtj = Matrix3::<f64>::zeros();
    for &ti in t {
        let e = (-ti / t1).exp();
        let j = [e, 1.0, amp * ti / (t1 * t1) * e];
        for r in 0..3 {
            for c in 0..3 {
                jtj[(r, c)] += j[r] * j[c];
            }
        }
    }
    let dof = t.len() as f64 - 3.0;
    let s2 = rss / dof;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| DetectionError::DegenerateFit("T1 is not identifiable".into()))?;
    let se = (s2 * cov[(2, 2)]).max(0.0).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| DetectionError::Invalid(e.to_string()))?
        .inverse_cdf(0.5 + 0.5 * CONFIDENCE);
    Ok(T1Fit {
        t1,
        amplitude: amp,
        offset: off,
        t1_std_err: se,
        ci: (t1 - q * se, t1 + q * se),
        rms_residual: (rss / t.len() as f64).sqrt(),
    })
}

fn ramsey_model(p: &[f64; 5], t: f64) -> f64 {
    let [a, ln_t2, delta, phase, b] = *p;
    a * (-t / ln_t2.exp()).exp() * (std::f64::consts::TAU * delta * t + phase).cos() + b
}

/// Damped-cosine fit: periodogram start, then Levenberg–Marquardt.
pub fn fit_ramsey(delays: &[f64], populations: &[f64]) -> Result<RamseyFit, DetectionError> {
    check_inputs(delays, populations, 6)?;
    let (t, y) = (delays, populations);
    let n = t.len();
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if spread(y) <= 1e-12 * scale {
        return Err(DetectionError::DegenerateFit(
            "no oscillation in the data".into(),
        ));
    }
    let t_min = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(DetectionError::Invalid(
            "delays must not all coincide".into(),
        ));
    }
    let step = span / (n - 1) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;

    // periodogram up to the Nyquist frequency of the mean spacing
    let nyquist = 0.5 / step;
    let n_freq = 20 * n;
    let mut best = (0.0, 0.0, 0.0);
    for k in 1..=n_freq {
        let f = nyquist * k as f64 / n_freq as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for (ti, yi) in t.iter().zip(y) {
            let arg = std::f64::consts::TAU * f * ti;
            c += (yi - mean) * arg.cos();
            s += (yi - mean) * arg.sin();
        }
        let pow = c * c + s * s;
        if pow > best.0 {
            best = (pow, f, (-s).atan2(c));
        }
    }
    let amp0 = 2.0 * best.0.sqrt() / n as f64;
    let mut p = [2.0 * amp0, (span / 3.0).ln(), best.1, best.2, mean];

    let residuals = |p: &[f64; 5]| -> DVector<f64> {
        DVector::from_iterator(n, t.iter().zip(y).map(|(ti, yi)| ramsey_model(p, *ti) - yi))
    };
    let cost = |r: &DVector<f64>| r.norm_squared();
    let mut r = residuals(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut trace = vec![c];
    let mut converged = false;
    let max_iter = 300;
    for _ in 0..max_iter {
        let mut jac = DMatrix::<f64>::zeros(n, 5);
        for j in 0..5 {
            let h = 1e-6 * p[j].abs().max(if j == 2 { 1.0 / span } else { 1e-3 });
            let mut pp = p;
            let mut pm = p;
            pp[j] += h;
            pm[j] -= h;
            let d = (residuals(&pp) - residuals(&pm)) / (2.0 * h);
            jac.set_column(j, &d);
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..5 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(delta) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p;
            for i in 0..5 {
                trial[i] += delta[i];
            }
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let rel_step = (0..5)
                    .map(|i| delta[i].abs() / p[i].abs().max(1e-12))
                    .fold(0.0, f64::max);
                let drop = c - ct;
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel_step < 1e-10 || drop <= 1e-15 * c.max(1e-300) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        trace.push(c);
        if !improved {
            // no downhill step left at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(DetectionError::non_convergence("Ramsey fit", trace));
    }
    let [mut a, ln_t2, mut delta, mut phase, b] = p;
    if a.abs() <= 1e-9 * scale {
        return Err(DetectionError::DegenerateFit(
            "fitted oscillation amplitude is zero".into(),
        ));
    }
    // canonical sign: A > 0, δ ≥ 0, φ in (−π, π]
    if delta < 0.0 {
        delta = -delta;
        phase = -phase;
    }
    if a < 0.0 {
        a = -a;
        phase += std::f64::consts::PI;
    }
    phase = (phase + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    Ok(RamseyFit {
        t2_star: ln_t2.exp(),
        detuning: delta,
        amplitude: a,
        phase,
        offset: b,
        rms_residual: (c / n as f64).sqrt(),
        aliased: delta * step > 0.25,
        iterations: trace.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn t1_curve(t1: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|i| i as f64 * 4e-6).collect();
        let y = t.iter().map(|ti| 0.8 * (-ti / t1).exp() + 0.05).collect();
        (t, y)
    }

    #[test]
    fn exact_t1_recovered() {
        let (t, y) = t1_curve(33e-6, 40);
        let fit = fit_t1(&t, &y).unwrap();
        assert!((fit.t1 / 33e-6 - 1.0).abs() < 1e-6);
        assert!((fit.amplitude - 0.8).abs() < 1e-6);
    }

    #[test]
    fn constant_t1_data_is_degenerate() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            fit_t1(&t, &[0.3; 10]),
            Err(DetectionError::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_t1(&t[..4], &[0.1, 0.2, 0.3, 0.4]),
            Err(DetectionError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn exact_ramsey_recovered() {
        let t: Vec<f64> = (0..120).map(|i| i as f64 * 25e-9).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|ti| {
                0.45 * (-ti / 1.5e-6).exp() * (std::f64::consts::TAU * 2e6 * ti + 0.3).cos() + 0.5
            })
            .collect();
        let fit = fit_ramsey(&t, &y).unwrap();
        assert!((fit.t2_star / 1.5e-6 - 1.0).abs() < 0.02);
        assert!((fit.detuning / 2e6 - 1.0).abs() < 0.02);
        assert!(!fit.aliased);
    }

    #[test]
    fn flat_ramsey_is_degenerate() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 25e-9).collect();
        assert!(matches!(
            fit_ramsey(&t, &[0.5; 50]),
            Err(DetectionError::DegenerateFit(_))
        ));
    }

    #[test]
    fn undersampled_ramsey_is_flagged() {
        // 3 points per period
        let t: Vec<f64> = (0..90).map(|i| i as f64 * 1.0 / 3.0e6).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = t
            .iter()
            .map(|ti| {
                let z: f64 = rng.sample(StandardNormal);
                0.4 * (-ti / 20e-6).exp() * (std::f64::consts::TAU * 1e6 * ti).cos()
                    + 0.5
                    + 1e-3 * z
            })
            .collect();
        let fit = fit_ramsey(&t, &y).unwrap();
        assert!(fit.aliased, "{fit:?}");
    }
}
