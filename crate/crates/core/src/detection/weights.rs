use std::ops::Range;

use num_complex::Complex64;

use super::{DetectionError, ShotRecord};

/// Matched-filter weight applied to the rotated in-phase quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub f: Vec<f64>,
    /// Rotation bringing the state separation onto I, in (−π, π].
    pub theta: f64,
}

impl WeightFunction {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `I cos θ + Q sin θ`.
    pub fn rotate(&self, i: f64, q: f64) -> f64 {
        i * self.theta.cos() + q * self.theta.sin()
    }

    pub fn norm_sq(&self) -> f64 {
        self.f.iter().map(|x| x * x).sum()
    }
}

pub(crate) fn check_grid(expected: usize, got: usize) -> Result<(), DetectionError> {
    if expected == got {
        Ok(())
    } else {
        Err(DetectionError::GridMismatch { expected, got })
    }
}

/// Weight from the averaged envelopes over the full record.
pub fn weight_function(
    avg_g: &[Complex64],
    avg_e: &[Complex64],
) -> Result<WeightFunction, DetectionError> {
    weight_function_windowed(avg_g, avg_e, 0..avg_g.len())
}

/// Weight supported on the sample range `window`, zero elsewhere.
///
/// θ maximizes `Σ (Re e^{-iθ} d)²` with `d = avg_e − avg_g`; of the two
/// solutions the one with `Σ Re e^{-iθ} d ≥ 0` is taken, so |e⟩ scores lie
/// above |g⟩ scores and θ follows a global phase of the envelopes.
pub fn weight_function_windowed(
    avg_g: &[Complex64],
    avg_e: &[Complex64],
    window: Range<usize>,
) -> Result<WeightFunction, DetectionError> {
    check_grid(avg_g.len(), avg_e.len())?;
    if window.start >= window.end || window.end > avg_g.len() {
        return Err(DetectionError::Invalid(format!(
            "window {window:?} outside a record of {} samples",
            avg_g.len()
        )));
    }
    let d: Vec<Complex64> = avg_e[window.clone()]
        .iter()
        .zip(&avg_g[window.clone()])
        .map(|(e, g)| e - g)
        .collect();
    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(DetectionError::DegenerateWeight);
    }
    // normalize first so the squares cannot underflow
    let d2: Complex64 = d.iter().map(|z| (z / scale).powi(2)).sum();
    let mut theta = 0.5 * d2.arg();
    let rot = |th: f64| Complex64::from_polar(1.0, -th);
    let net: f64 = d.iter().map(|z| (rot(theta) * z).re).sum();
    if net < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta > std::f64::consts::PI {
        theta -= 2.0 * std::f64::consts::PI;
    }
    let r = rot(theta);
    let proj: Vec<f64> = d.iter().map(|z| (r * z).re).collect();
    let peak = proj.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(DetectionError::DegenerateWeight);
    }
    let mut f = vec![0.0; avg_g.len()];
    for (k, v) in window.zip(proj) {
        f[k] = v / peak;
    }
    Ok(WeightFunction { f, theta })
}

/// Integrated score `Σ f(t) I_rot(t) dt`.
pub fn integrate_shot(shot: &ShotRecord, w: &WeightFunction) -> Result<f64, DetectionError> {
    check_grid(w.len(), shot.i.len())?;
    check_grid(w.len(), shot.q.len())?;
    let (c, s) = (w.theta.cos(), w.theta.sin());
    Ok(w.f
        .iter()
        .zip(shot.i.iter().zip(&shot.q))
        .fold(0.0, |acc, (f, (i, q))| acc + f * (i * c + q * s))
        * shot.dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::QubitState;

    #[test]
    fn identical_envelopes_are_degenerate() {
        let a = vec![Complex64::new(1.0, 2.0); 8];
        assert!(matches!(
            weight_function(&a, &a),
            Err(DetectionError::DegenerateWeight)
        ));
    }

    #[test]
    fn imaginary_separation_rotates_by_quarter_turn() {
        let g = vec![Complex64::new(0.3, 0.0); 10];
        let e = vec![Complex64::new(0.3, 2.0); 10];
        let w = weight_function(&g, &e).unwrap();
        let m = w.theta.rem_euclid(std::f64::consts::PI);
        assert!((m - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(w.f.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let g = vec![Complex64::new(0.0, 0.0); 3];
        let e = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            weight_function(&g, &e),
            Err(DetectionError::GridMismatch { .. })
        ));
    }

    #[test]
    fn score_is_linear_and_vanishes_for_zero_weight() {
        let shot = ShotRecord {
            index: 0,
            seed: 0,
            label: QubitState::G,
            dt: 0.5,
            i: vec![1.0, 2.0, 3.0],
            q: vec![-1.0, 0.5, 0.0],
        };
        let zero = WeightFunction {
            f: vec![0.0; 3],
            theta: 0.4,
        };
        assert_eq!(integrate_shot(&shot, &zero).unwrap(), 0.0);
        let w = WeightFunction {
            f: vec![1.0, -0.5, 0.25],
            theta: 0.4,
        };
        let mut doubled = shot.clone();
        doubled
            .i
            .iter_mut()
            .chain(doubled.q.iter_mut())
            .for_each(|x| *x *= 2.0);
        let a = integrate_shot(&shot, &w).unwrap();
        let b = integrate_shot(&doubled, &w).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn window_restricts_support() {
        let g: Vec<_> = (0..10).map(|_| Complex64::new(0.0, 0.0)).collect();
        let e: Vec<_> = (0..10)
            .map(|k| Complex64::new(1.0 + k as f64, 0.0))
            .collect();
        let w = weight_function_windowed(&g, &e, 2..5).unwrap();
        assert_eq!(w.f[1], 0.0);
        assert_eq!(w.f[5], 0.0);
        assert_eq!(w.f[4], 1.0);
        assert!(weight_function_windowed(&g, &e, 5..11).is_err());
    }
}
