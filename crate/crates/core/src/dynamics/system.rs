use num_complex::Complex64;

use super::{DynamicsError, OutputPort, Scheme};
use crate::device::{DeviceParams, QubitState};
use crate::pulse::PulseEnvelope;

pub const NMODES: usize = 5;
/// `[a_c, a_e, a_o, a_s*, a_tm*]`.
pub type StateVec = [Complex64; NMODES];

pub(crate) const IC: usize = 0;
pub(crate) const IE: usize = 1;
pub(crate) const IO: usize = 2;
pub(crate) const IS: usize = 3;
pub(crate) const ITM: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Where the external signal drive enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputPort {
    /// Strong port of the cQED cavity (microwave schemes).
    Cqed,
    /// Directly into the EO microwave cavity, bypassing the cQED cavity.
    Eo,
    /// Optical signal at the anti-Stokes frequency (all-optical scheme).
    Optical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PumpDrive {
    Off,
    /// Fixed pump-enhanced coupling g = ā_p g₀, rad/s.
    Constant(Complex64),
    /// Pump input field ā_p,in(t) integrated alongside the signal modes.
    Pulse(PulseEnvelope),
}

/// The driven linear mean-field system for one readout configuration.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub params: DeviceParams,
    pub scheme: Scheme,
    pub qubit: QubitState,
    pub input_port: InputPort,
    pub drive: Option<PulseEnvelope>,
    pub pump: PumpDrive,
    /// Include the parametric `g* a_s†` term.
    pub stokes: bool,
}

/// Drift, input and output matrices for `ẋ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrices {
    pub a: [[Complex64; NMODES]; NMODES],
    pub b: StateVec,
    pub out_c: (StateVec, Complex64),
    pub out_e: (StateVec, Complex64),
    pub out_o: (StateVec, Complex64),
}

impl Matrices {
    pub fn output(&self, port: OutputPort) -> &(StateVec, Complex64) {
        match port {
            OutputPort::Cqed => &self.out_c,
            OutputPort::Eo => &self.out_e,
            OutputPort::Optical => &self.out_o,
        }
    }
}

/// Boundary fields at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Links {
    pub a_c_in: Complex64,
    pub a_c_out: Complex64,
    pub a_e_in: Complex64,
    pub a_e_out: Complex64,
    pub a_o_in: Complex64,
    pub a_o_out: Complex64,
}

impl LinearSystem {
    pub fn new(params: DeviceParams, scheme: Scheme, qubit: QubitState) -> Self {
        let input_port = match scheme {
            Scheme::OptOpt => InputPort::Optical,
            _ => InputPort::Cqed,
        };
        LinearSystem {
            params,
            scheme,
            qubit,
            input_port,
            drive: None,
            pump: PumpDrive::Off,
            stokes: true,
        }
    }

    pub fn with_drive(
        mut self,
        port: InputPort,
        pulse: PulseEnvelope,
    ) -> Result<Self, DynamicsError> {
        let ok = match self.scheme {
            Scheme::OptOpt => port == InputPort::Optical,
            Scheme::MwMw | Scheme::MwOpt => port != InputPort::Optical,
        };
        if !ok {
            return Err(DynamicsError::SchemeMismatch {
                scheme: self.scheme,
                port,
            });
        }
        pulse.validate()?;
        self.input_port = port;
        self.drive = Some(pulse);
        Ok(self)
    }

    pub fn with_pump(mut self, pump: PumpDrive) -> Self {
        self.pump = pump;
        self
    }

    pub fn with_stokes(mut self, stokes: bool) -> Self {
        self.stokes = stokes;
        self
    }

    pub fn detection_port(&self) -> OutputPort {
        match self.scheme {
            Scheme::MwMw => OutputPort::Eo,
            Scheme::MwOpt | Scheme::OptOpt => OutputPort::Optical,
        }
    }

    /// Detuning of the cQED cavity from the EO frame, including the qubit branch.
    pub fn cqed_detuning(&self) -> f64 {
        let p = &self.params;
        (p.cqed.omega - p.eo.omega) + 0.5 * p.chi0 * (self.qubit.sigma_z() + 1.0)
    }

    /// Upper bound on |g| over the run.
    pub fn max_coupling(&self) -> f64 {
        match &self.pump {
            PumpDrive::Off => 0.0,
            PumpDrive::Constant(g) => g.norm(),
            PumpDrive::Pulse(pulse) => {
                let p = &self.params;
                let peak = match &pulse.shape {
                    crate::pulse::PulseShape::Tabulated { samples, .. } => {
                        samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
                            * pulse.amplitude.norm()
                    }
                    _ => pulse.amplitude.norm(),
                };
                p.g0 * (p.eta_p * p.kappa_p).sqrt() * peak / (0.5 * p.kappa_p)
            }
        }
    }

    /// Largest rate in the system: drift entries, pump dynamics and carriers.
    pub fn max_rate(&self) -> f64 {
        let g = Complex64::new(self.max_coupling(), 0.0);
        let mut rate: f64 = 0.0;
        if let Ok(m) = self.matrices(g, 0.0) {
            for row in &m.a {
                for z in row {
                    rate = rate.max(z.norm());
                }
            }
        }
        if let PumpDrive::Pulse(pulse) = &self.pump {
            let p = &self.params;
            rate = rate.max(Complex64::new(-0.5 * p.kappa_p, p.delta_p).norm());
            rate = rate.max(pulse.carrier_detuning.abs());
        }
        if let Some(d) = &self.drive {
            rate = rate.max(d.carrier_detuning.abs());
        }
        rate
    }

    fn link_loop_denominator(&self, ell: Complex64) -> Result<Complex64, DynamicsError> {
        let den = Complex64::new(1.0, 0.0) - ell * self.params.eta_ce;
        if den.norm() < 1e-12 {
            return Err(DynamicsError::Singular(
                "lossless zero-delay bidirectional link (eta_ec * eta_ce = 1) has no unique solution"
                    .into(),
            ));
        }
        Ok(den)
    }

    /// Assembles the state-space matrices at coupling `g`. `omega` is the
    /// drive-frequency offset; it only enters through the link delay phase.
    pub fn matrices(&self, g: Complex64, omega: f64) -> Result<Matrices, DynamicsError> {
        let p = &self.params;
        let kc = p.cqed.kappa_ext.sqrt();
        let ke = p.eo.kappa_ext.sqrt();
        let ko = p.optical.kappa_ext.sqrt();
        let ell = Complex64::from_polar(p.eta_ec, omega * p.tau);
        let gs = if self.stokes { g } else { ZERO };

        let mut a = [[ZERO; NMODES]; NMODES];
        let mut b = [ZERO; NMODES];
        a[IC][IC] = Complex64::new(-0.5 * p.cqed.kappa, -self.cqed_detuning());
        a[IE][IE] = Complex64::new(-0.5 * p.eo.kappa, 0.0);
        a[IE][IO] = -I * g;
        a[IE][IS] = -I * gs.conj();
        a[IO][IE] = -I * g.conj();
        a[IO][IO] = Complex64::new(-0.5 * p.optical.kappa, p.delta_o);
        a[IS][IE] = I * gs;
        a[IS][IS] = Complex64::new(-0.5 * p.kappa_s, -p.delta_s);
        a[IS][ITM] = I * p.j_tm;
        a[ITM][IS] = I * p.j_tm;
        a[ITM][ITM] = Complex64::new(-0.5 * p.kappa_tm, -p.delta_tm);

        let mut out_c = ([ZERO; NMODES], ZERO);
        let mut out_e = ([ZERO; NMODES], ZERO);
        let mut out_o = ([ZERO; NMODES], ZERO);
        out_o.0[IO] = Complex64::new(-ko, 0.0);

        match self.scheme {
            Scheme::MwMw | Scheme::MwOpt => {
                // a_c,out = a_c,in − k_c a_c ; a_e,in = ℓ a_c,out (+ direct drive)
                a[IE][IC] = -ell * ke * kc;
                out_c.0[IC] = Complex64::new(-kc, 0.0);
                out_e.0[IC] = -ell * kc;
                out_e.0[IE] = Complex64::new(-ke, 0.0);
                match self.input_port {
                    InputPort::Cqed => {
                        b[IC] = Complex64::new(kc, 0.0);
                        b[IE] = ell * ke;
                        out_c.1 = Complex64::new(1.0, 0.0);
                        out_e.1 = ell;
                    }
                    InputPort::Eo => {
                        b[IE] = Complex64::new(ke, 0.0);
                        out_e.1 = Complex64::new(1.0, 0.0);
                    }
                    InputPort::Optical => unreachable!("rejected by with_drive"),
                }
            }
            Scheme::OptOpt => {
                // a_e,in = −ℓ(η_ce k_e a_e + k_c a_c)/(1 − ℓη_ce)
                // a_c,in = −η_ce(k_e a_e + ℓ k_c a_c)/(1 − ℓη_ce)
                let den = self.link_loop_denominator(ell)?;
                let eta_ce = p.eta_ce;
                let ce_in_c = -eta_ce * ell * kc / den;
                let ce_in_e = -eta_ce * ke / den;
                let ee_in_c = -ell * kc / den;
                let ee_in_e = -ell * eta_ce * ke / den;
                a[IC][IC] += kc * ce_in_c;
                a[IC][IE] = kc * ce_in_e;
                a[IE][IC] = ke * ee_in_c;
                a[IE][IE] += ke * ee_in_e;
                out_c.0[IC] = ce_in_c - kc;
                out_c.0[IE] = ce_in_e;
                out_e.0[IC] = ee_in_c;
                out_e.0[IE] = ee_in_e - ke;
                b[IO] = Complex64::new(ko, 0.0);
                out_o.1 = Complex64::new(1.0, 0.0);
            }
        }
        Ok(Matrices {
            a,
            b,
            out_c,
            out_e,
            out_o,
        })
    }

    pub(crate) fn rhs(&self) -> Result<Rhs, DynamicsError> {
        let p = &self.params;
        if self.scheme == Scheme::OptOpt && p.tau == 0.0 {
            self.link_loop_denominator(Complex64::new(p.eta_ec, 0.0))?;
        }
        Ok(Rhs {
            scheme: self.scheme,
            port: self.input_port,
            stokes: self.stokes,
            kc: p.cqed.kappa_ext.sqrt(),
            ke: p.eo.kappa_ext.sqrt(),
            ko: p.optical.kappa_ext.sqrt(),
            c_diag: Complex64::new(-0.5 * p.cqed.kappa, -self.cqed_detuning()),
            e_diag: -0.5 * p.eo.kappa,
            o_diag: Complex64::new(-0.5 * p.optical.kappa, p.delta_o),
            s_diag: Complex64::new(-0.5 * p.kappa_s, -p.delta_s),
            tm_diag: Complex64::new(-0.5 * p.kappa_tm, -p.delta_tm),
            j: p.j_tm,
            eta_ec: p.eta_ec,
            eta_ce: p.eta_ce,
            delayed: p.tau > 0.0,
        })
    }
}

/// Time-domain right-hand side, resolving the boundary relations directly
/// rather than through the assembled matrices.
#[derive(Debug, Clone)]
pub(crate) struct Rhs {
    scheme: Scheme,
    port: InputPort,
    stokes: bool,
    kc: f64,
    ke: f64,
    ko: f64,
    c_diag: Complex64,
    e_diag: f64,
    o_diag: Complex64,
    s_diag: Complex64,
    tm_diag: Complex64,
    j: f64,
    eta_ec: f64,
    eta_ce: f64,
    delayed: bool,
}

impl Rhs {
    /// Boundary fields for state `x` under drive `u`. `c_out_delayed` is the
    /// cQED output one link delay ago; ignored when the link has no delay.
    pub fn links(&self, x: &StateVec, u: Complex64, c_out_delayed: Complex64) -> Links {
        let (a_c, a_e, a_o) = (x[IC], x[IE], x[IO]);
        let mut l = Links::default();
        match self.scheme {
            Scheme::MwMw | Scheme::MwOpt => {
                if self.port == InputPort::Cqed {
                    l.a_c_in = u;
                }
                l.a_c_out = l.a_c_in - self.kc * a_c;
                let upstream = if self.delayed {
                    c_out_delayed
                } else {
                    l.a_c_out
                };
                l.a_e_in = self.eta_ec * upstream;
                if self.port == InputPort::Eo {
                    l.a_e_in += u;
                }
            }
            Scheme::OptOpt => {
                l.a_o_in = u;
                l.a_e_in = if self.delayed {
                    self.eta_ec * c_out_delayed
                } else {
                    let loop_gain = self.eta_ec * self.eta_ce;
                    -self.eta_ec * (self.eta_ce * self.ke * a_e + self.kc * a_c) / (1.0 - loop_gain)
                };
                l.a_c_in = self.eta_ce * (l.a_e_in - self.ke * a_e);
                l.a_c_out = l.a_c_in - self.kc * a_c;
            }
        }
        l.a_e_out = l.a_e_in - self.ke * a_e;
        l.a_o_out = l.a_o_in - self.ko * a_o;
        l
    }

    pub fn deriv(&self, x: &StateVec, g: Complex64, links: &Links) -> StateVec {
        let (a_c, a_e, a_o, b_s, b_tm) = (x[IC], x[IE], x[IO], x[IS], x[ITM]);
        let gs = if self.stokes { g } else { ZERO };
        [
            self.c_diag * a_c + self.kc * links.a_c_in,
            self.e_diag * a_e - I * g * a_o - I * gs.conj() * b_s + self.ke * links.a_e_in,
            self.o_diag * a_o - I * g.conj() * a_e + self.ko * links.a_o_in,
            self.s_diag * b_s + I * gs * a_e + I * self.j * b_tm,
            self.tm_diag * b_tm + I * self.j * b_s,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(scheme: Scheme, qubit: QubitState) -> LinearSystem {
        let mut p = DeviceParams::reference(6.251);
        p.j_tm = 2.0e6;
        LinearSystem::new(p, scheme, qubit)
            .with_pump(PumpDrive::Constant(Complex64::new(3.0e6, 1.0e6)))
    }

    /// The assembled matrices must equal the Jacobian of the time-domain RHS.
    #[test]
    fn matrices_match_rhs_jacobian() {
        for scheme in Scheme::ALL {
            for q in [QubitState::G, QubitState::E] {
                let s = sys(scheme, q);
                let g = Complex64::new(3.0e6, 1.0e6);
                let m = s.matrices(g, 0.0).unwrap();
                let rhs = s.rhs().unwrap();
                for j in 0..NMODES {
                    let mut x = [ZERO; NMODES];
                    x[j] = Complex64::new(1.0, 0.0);
                    let l = rhs.links(&x, ZERO, ZERO);
                    let d = rhs.deriv(&x, g, &l);
                    for i in 0..NMODES {
                        let diff = (d[i] - m.a[i][j]).norm();
                        assert!(
                            diff <= 1e-9 * (1.0 + m.a[i][j].norm()),
                            "{scheme} A[{i}][{j}]"
                        );
                    }
                    let (c, _) = m.output(s.detection_port());
                    let y = match s.detection_port() {
                        OutputPort::Eo => l.a_e_out,
                        OutputPort::Optical => l.a_o_out,
                        OutputPort::Cqed => l.a_c_out,
                    };
                    assert!((y - c[j]).norm() <= 1e-9 * (1.0 + c[j].norm()));
                }
                let x = [ZERO; NMODES];
                let l = rhs.links(&x, Complex64::new(1.0, 0.0), ZERO);
                let d = rhs.deriv(&x, g, &l);
                for i in 0..NMODES {
                    assert!((d[i] - m.b[i]).norm() <= 1e-9 * (1.0 + m.b[i].norm()));
                }
            }
        }
    }

    #[test]
    fn drift_diagonal_is_damped() {
        for scheme in Scheme::ALL {
            let m = sys(scheme, QubitState::G)
                .matrices(Complex64::new(1e6, 0.0), 0.0)
                .unwrap();
            for i in 0..NMODES {
                assert!(m.a[i][i].re <= 0.0);
            }
        }
    }

    #[test]
    fn optical_drive_rejected_in_microwave_schemes() {
        let s = LinearSystem::new(DeviceParams::reference(6.251), Scheme::MwMw, QubitState::G);
        let err = s
            .with_drive(InputPort::Optical, PulseEnvelope::constant(1.0.into()))
            .unwrap_err();
        assert!(matches!(err, DynamicsError::SchemeMismatch { .. }));
        let s = LinearSystem::new(
            DeviceParams::reference(6.251),
            Scheme::OptOpt,
            QubitState::G,
        );
        assert!(s
            .with_drive(InputPort::Cqed, PulseEnvelope::constant(1.0.into()))
            .is_err());
    }

    #[test]
    fn lossless_zero_delay_loop_is_singular() {
        let mut p = DeviceParams::reference(6.251);
        p.eta_ec = 1.0;
        p.eta_ce = 1.0;
        let s = LinearSystem::new(p, Scheme::OptOpt, QubitState::E);
        assert!(matches!(
            s.matrices(ZERO, 0.0),
            Err(DynamicsError::Singular(_))
        ));
    }

    #[test]
    fn qubit_branch_detuning() {
        let p = DeviceParams::reference(6.251);
        let e = LinearSystem::new(p.clone(), Scheme::MwMw, QubitState::E);
        let g = LinearSystem::new(p.clone(), Scheme::MwMw, QubitState::G);
        assert_eq!(e.cqed_detuning(), p.cqed.omega - p.eo.omega);
        assert!((g.cqed_detuning() - p.chi0).abs() < 1e-6);
    }
}
