use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use super::integrate::to_modes;
use super::system::Matrices;
use super::{
    DynamicsError, InputPort, LinearSystem, ModeVector, OutputPort, PumpDrive, Scheme, StateVec,
    NMODES,
};
use crate::device::{Cavity, DeviceParams, QubitState};
use crate::pulse::PulseEnvelope;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fixed point of the linear equations under a constant drive and coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub modes: ModeVector,
    pub a_c_out: Complex64,
    pub a_e_out: Complex64,
    pub a_o_out: Complex64,
    pub g: Complex64,
}

impl SteadyState {
    pub fn output(&self, port: OutputPort) -> Complex64 {
        match port {
            OutputPort::Cqed => self.a_c_out,
            OutputPort::Eo => self.a_e_out,
            OutputPort::Optical => self.a_o_out,
        }
    }
}

/// Linear response to a unit drive `e^{-iωt}`: intracavity phasors and the
/// three output phasors.
pub(crate) fn unit_response(
    m: &Matrices,
    omega: f64,
) -> Result<(StateVec, [Complex64; 3]), DynamicsError> {
    let a = SMatrix::<Complex64, NMODES, NMODES>::from_fn(|i, j| {
        let diag = if i == j {
            Complex64::new(0.0, -omega)
        } else {
            ZERO
        };
        diag - m.a[i][j]
    });
    let b = SVector::<Complex64, NMODES>::from_column_slice(&m.b);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| DynamicsError::Singular(format!("at drive offset {omega:e} rad/s")))?;
    let x: StateVec = std::array::from_fn(|i| x[i]);
    let out = |row: &(StateVec, Complex64)| -> Complex64 {
        row.0.iter().zip(&x).map(|(c, v)| c * v).sum::<Complex64>() + row.1
    };
    Ok((x, [out(&m.out_c), out(&m.out_e), out(&m.out_o)]))
}

impl LinearSystem {
    /// Coupling to use for a time-independent solve.
    pub fn constant_coupling(&self) -> Result<Complex64, DynamicsError> {
        match &self.pump {
            PumpDrive::Off => Ok(ZERO),
            PumpDrive::Constant(g) => Ok(*g),
            PumpDrive::Pulse(_) => Err(DynamicsError::TimeDependentDrift),
        }
    }
}

/// Solves the fixed point at the plateau of the drive. With a detuned carrier
/// the returned amplitudes are phasors: the physical field is `x e^{-iΔt}`.
pub fn steady_state(sys: &LinearSystem) -> Result<SteadyState, DynamicsError> {
    let g = sys.constant_coupling()?;
    let (u, omega) = sys
        .drive
        .as_ref()
        .map_or((ZERO, 0.0), |d| (d.plateau(), d.carrier_detuning));
    let m = sys.matrices(g, omega)?;
    let (x, out) = unit_response(&m, omega)?;
    let x: StateVec = std::array::from_fn(|i| x[i] * u);
    let a_p = if sys.params.g0 > 0.0 {
        g / sys.params.g0
    } else {
        ZERO
    };
    Ok(SteadyState {
        modes: to_modes(&x, a_p),
        a_c_out: out[0] * u,
        a_e_out: out[1] * u,
        a_o_out: out[2] * u,
        g,
    })
}

/// Reflection `r(ω)` of a single one-sided cavity detuned by `detuning`.
pub fn cavity_reflection(cavity: &Cavity, detuning: f64, omega: f64) -> Complex64 {
    1.0 - cavity.kappa_ext / Complex64::new(0.5 * cavity.kappa, -(omega - detuning))
}

/// Microwave reflection of the cascade (cQED input to EO output, pump off)
/// at drive offsets `freqs` from the EO resonance, rad/s. Cable loss and
/// delay are included, so far off resonance `|S11| → η_ec`.
pub fn reflection_spectrum(
    p: &DeviceParams,
    state: QubitState,
    freqs: &[f64],
) -> Result<Vec<Complex64>, DynamicsError> {
    let sys = LinearSystem::new(p.clone(), Scheme::MwMw, state)
        .with_drive(InputPort::Cqed, PulseEnvelope::constant(1.0.into()))?;
    freqs
        .iter()
        .map(|&w| {
            let m = sys.matrices(ZERO, w)?;
            Ok(unit_response(&m, w)?.1[1])
        })
        .collect()
}

/// Microwave-to-optical transfer of the EO device alone under constant coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionTransfer {
    pub freqs: Vec<f64>,
    /// `a_o,out / a_e,in`
    pub s_oe: Vec<Complex64>,
    /// `a_e,out / a_e,in`
    pub s_ee: Vec<Complex64>,
    pub peak_omega: f64,
    pub peak_efficiency: f64,
    /// Full width at half maximum of `|S_oe|²`, rad/s. `None` when the
    /// transfer vanishes or the half-maximum is not bracketed.
    pub fwhm: Option<f64>,
}

/// Beam-splitter transfer (parametric Stokes term off) at coupling `g`.
pub fn conversion_transfer(
    p: &DeviceParams,
    g: f64,
    freqs: &[f64],
) -> Result<ConversionTransfer, DynamicsError> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(DynamicsError::Invalid(format!(
            "coupling must be >= 0, got {g}"
        )));
    }
    let sys = LinearSystem::new(p.clone(), Scheme::MwOpt, QubitState::E)
        .with_drive(InputPort::Eo, PulseEnvelope::constant(1.0.into()))?
        .with_pump(PumpDrive::Constant(Complex64::new(g, 0.0)))
        .with_stokes(false);
    let gc = Complex64::new(g, 0.0);
    let eval = |w: f64| -> Result<[Complex64; 3], DynamicsError> {
        Ok(unit_response(&sys.matrices(gc, w)?, w)?.1)
    };
    let power = |w: f64| eval(w).map(|o| o[2].norm_sqr());

    let mut s_oe = Vec::with_capacity(freqs.len());
    let mut s_ee = Vec::with_capacity(freqs.len());
    for &w in freqs {
        let o = eval(w)?;
        s_ee.push(o[1]);
        s_oe.push(o[2]);
    }

    // Locate the peak on a coarse scan, then refine by golden section.
    let span = 2.0 * (p.eo.kappa + p.optical.kappa + p.delta_o.abs() + 2.0 * g);
    let n = 2000;
    let mut best = (0.0, power(0.0)?);
    for i in 0..=n {
        let w = -span + 2.0 * span * i as f64 / n as f64;
        let v = power(w)?;
        if v > best.1 {
            best = (w, v);
        }
    }
    let h = 2.0 * span / n as f64;
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if power(a)? > power(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    let peak_omega = 0.5 * (lo + hi);
    let peak_efficiency = power(peak_omega)?.max(best.1);

    let fwhm = if peak_efficiency > 0.0 {
        let half = 0.5 * peak_efficiency;
        let edge = |dir: f64| -> Result<Option<f64>, DynamicsError> {
            let far = peak_omega + dir * span;
            if power(far)? > half {
                return Ok(None);
            }
            let (mut inside, mut outside) = (peak_omega, far);
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if power(mid)? > half {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            Ok(Some(0.5 * (inside + outside)))
        };
        match (edge(-1.0)?, edge(1.0)?) {
            (Some(l), Some(r)) => Some(r - l),
            _ => None,
        }
    } else {
        None
    };

    Ok(ConversionTransfer {
        freqs: freqs.to_vec(),
        s_oe,
        s_ee,
        peak_omega,
        peak_efficiency,
        fwhm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TAU;

    #[test]
    fn decoupled_optical_reflection() {
        let p = DeviceParams::reference(6.251);
        let sys = LinearSystem::new(p.clone(), Scheme::OptOpt, QubitState::G)
            .with_drive(InputPort::Optical, PulseEnvelope::constant(1.0.into()))
            .unwrap();
        let ss = steady_state(&sys).unwrap();
        assert_eq!(ss.modes.a_e, ZERO);
        let expect = 1.0 - 2.0 * p.optical.efficiency();
        assert!((ss.a_o_out - expect).norm() < 1e-12);
    }

    #[test]
    fn excited_branch_reflects_less() {
        let p = DeviceParams::reference(6.251);
        let run = |q| {
            let sys = LinearSystem::new(p.clone(), Scheme::MwMw, q)
                .with_drive(InputPort::Cqed, PulseEnvelope::constant(1.0.into()))
                .unwrap();
            steady_state(&sys).unwrap()
        };
        let (g, e) = (run(QubitState::G), run(QubitState::E));
        assert!(e.a_e_out.norm_sqr() < g.a_e_out.norm_sqr());
        // the detuned branch is nearly fully reflected by the cQED cavity
        let eta_c = p.cqed.efficiency();
        assert!(g.a_c_out.norm_sqr() >= (1.0 - 2.0 * eta_c).powi(2));
        assert!(g.a_c_out.norm_sqr() > 0.99);
    }

    #[test]
    fn far_off_resonance_reflection() {
        let mut p = DeviceParams::reference(6.251);
        p.eta_ec = 1.0;
        let s = reflection_spectrum(&p, QubitState::G, &[1e13]).unwrap();
        assert!((s[0] - 1.0).norm() < 1e-5);
        p.eta_ec = 0.7;
        let s = reflection_spectrum(&p, QubitState::G, &[1e13]).unwrap();
        assert!((s[0] - 0.7).norm() < 1e-5);
    }

    #[test]
    fn lossless_single_cavity_is_all_pass() {
        let c = Cavity {
            omega: 1.0,
            kappa: 3.0,
            kappa_ext: 0.0,
        };
        for w in [-5.0, 0.0, 2.0] {
            assert!((cavity_reflection(&c, 0.7, w).norm() - 1.0).abs() < 1e-15);
        }
        let c = Cavity {
            kappa_ext: 3.0,
            ..c
        };
        assert!((cavity_reflection(&c, 0.7, 0.7) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn zero_coupling_no_conversion() {
        let p = DeviceParams::reference(6.251);
        let t = conversion_transfer(&p, 0.0, &[0.0, 1e7]).unwrap();
        assert!(t.s_oe.iter().all(|z| z.norm() == 0.0));
        assert_eq!(t.fwhm, None);
    }

    #[test]
    fn peak_conversion_closed_form() {
        let p = DeviceParams::reference(6.251);
        let g = TAU * 875e3;
        let c = 4.0 * g * g / (p.eo.kappa * p.optical.kappa);
        let t = conversion_transfer(&p, g, &[0.0]).unwrap();
        let expect = p.eo.efficiency() * p.optical.efficiency() * 4.0 * c / (1.0 + c).powi(2);
        assert!((t.s_oe[0].norm_sqr() - expect).abs() < 1e-12 * expect);
        assert!(t.peak_omega.abs() < 1e3);
        let fwhm_mhz = t.fwhm.unwrap() / TAU / 1e6;
        assert!((fwhm_mhz - 9.69).abs() < 1.0, "{fwhm_mhz}");
    }
}
