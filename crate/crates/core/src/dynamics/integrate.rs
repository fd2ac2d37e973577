use num_complex::Complex64;

use super::pump::pump_rate;
use super::system::{Links, PumpDrive, IC, IE, IO, IS, ITM};
use super::{DynamicsError, LinearSystem, ModeVector, OutputPort, StateVec, NMODES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sampled solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub modes: Vec<ModeVector>,
    pub a_c_out: Vec<Complex64>,
    pub a_e_out: Vec<Complex64>,
    pub a_o_out: Vec<Complex64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn output(&self, port: OutputPort) -> &[Complex64] {
        match port {
            OutputPort::Cqed => &self.a_c_out,
            OutputPort::Eo => &self.a_e_out,
            OutputPort::Optical => &self.a_o_out,
        }
    }

    /// Last sample in the internal state-vector layout.
    pub fn final_state(&self) -> StateVec {
        to_state(self.modes.last().expect("trajectory is never empty"))
    }
}

pub(crate) fn to_modes(x: &StateVec, a_p: Complex64) -> ModeVector {
    ModeVector {
        a_c: x[IC],
        a_e: x[IE],
        a_o: x[IO],
        a_s: x[IS].conj(),
        a_tm: x[ITM].conj(),
        a_p,
    }
}

pub(crate) fn to_state(m: &ModeVector) -> StateVec {
    [m.a_c, m.a_e, m.a_o, m.a_s.conj(), m.a_tm.conj()]
}

/// Integrates from the empty state over `[0, t_end]` with step `dt`.
pub fn integrate(sys: &LinearSystem, dt: f64, t_end: f64) -> Result<Trajectory, DynamicsError> {
    integrate_from(sys, &[ZERO; NMODES], dt, t_end)
}

/// Fixed-step RK4 from initial state `x0` (pump cavity starts empty).
pub fn integrate_from(
    sys: &LinearSystem,
    x0: &StateVec,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::Invalid(format!(
            "duration must be > 0, got {t_end}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::Invalid(format!(
            "step must be > 0, got {dt}"
        )));
    }
    let bound = 1.0 / (20.0 * sys.max_rate());
    if dt > bound * (1.0 + 1e-9) {
        return Err(DynamicsError::StepTooLarge { dt, bound });
    }
    let delay_steps = if sys.params.tau > 0.0 {
        let n = (sys.params.tau / dt).round();
        if n < 2.0 {
            return Err(DynamicsError::Invalid(format!(
                "link delay {} s spans fewer than two steps of {dt} s",
                sys.params.tau
            )));
        }
        Some(n as usize)
    } else {
        None
    };

    let rhs = sys.rhs()?;
    let p = &sys.params;
    let pump_gain = (p.eta_p * p.kappa_p).sqrt();
    let pump_rate = pump_rate(p);
    let drive = |t: f64| sys.drive.as_ref().map_or(ZERO, |d| d.value(t));
    let pump_in = |t: f64| match &sys.pump {
        PumpDrive::Pulse(pulse) => pulse.value(t),
        _ => ZERO,
    };
    let coupling = |a_p: Complex64| match &sys.pump {
        PumpDrive::Off => ZERO,
        PumpDrive::Constant(g) => *g,
        PumpDrive::Pulse(_) => a_p * p.g0,
    };
    let pumped = matches!(sys.pump, PumpDrive::Pulse(_));

    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut out = Trajectory {
        times: Vec::with_capacity(steps + 1),
        modes: Vec::with_capacity(steps + 1),
        a_c_out: Vec::with_capacity(steps + 1),
        a_e_out: Vec::with_capacity(steps + 1),
        a_o_out: Vec::with_capacity(steps + 1),
    };

    // a_c,out history for the delayed link; zero before the run starts.
    let hist = |h: &[Complex64], i: isize| if i < 0 { ZERO } else { h[i as usize] };
    let delayed = |h: &[Complex64], k: usize, half: bool| -> Complex64 {
        let Some(n) = delay_steps else { return ZERO };
        let i = k as isize - n as isize;
        if half {
            // cubic Lagrange at the midpoint of [i, i + 1]
            (9.0 * (hist(h, i) + hist(h, i + 1)) - hist(h, i - 1) - hist(h, i + 2)) / 16.0
        } else {
            hist(h, i)
        }
    };

    let mut x = *x0;
    let mut a_p = ZERO;
    let add = |x: &StateVec, k: &StateVec, h: f64| -> StateVec {
        std::array::from_fn(|i| x[i] + h * k[i])
    };

    for k in 0..=steps {
        let t = k as f64 * dt;
        let l1: Links = rhs.links(&x, drive(t), delayed(&out.a_c_out, k, false));
        out.times.push(t);
        out.modes.push(to_modes(&x, a_p));
        out.a_c_out.push(l1.a_c_out);
        out.a_e_out.push(l1.a_e_out);
        out.a_o_out.push(l1.a_o_out);
        if k == steps {
            break;
        }

        let th = t + 0.5 * dt;
        let tn = t + dt;
        let dp = |a: Complex64, t: f64| pump_rate * a + pump_gain * pump_in(t);

        let k1 = rhs.deriv(&x, coupling(a_p), &l1);
        let p1 = if pumped { dp(a_p, t) } else { ZERO };

        let x2 = add(&x, &k1, 0.5 * dt);
        let ap2 = a_p + 0.5 * dt * p1;
        let l2 = rhs.links(&x2, drive(th), delayed(&out.a_c_out, k, true));
        let k2 = rhs.deriv(&x2, coupling(ap2), &l2);
        let p2 = if pumped { dp(ap2, th) } else { ZERO };

        let x3 = add(&x, &k2, 0.5 * dt);
        let ap3 = a_p + 0.5 * dt * p2;
        let l3 = rhs.links(&x3, drive(th), delayed(&out.a_c_out, k, true));
        let k3 = rhs.deriv(&x3, coupling(ap3), &l3);
        let p3 = if pumped { dp(ap3, th) } else { ZERO };

        let x4 = add(&x, &k3, dt);
        let ap4 = a_p + dt * p3;
        let l4 = rhs.links(&x4, drive(tn), delayed(&out.a_c_out, k + 1, false));
        let k4 = rhs.deriv(&x4, coupling(ap4), &l4);
        let p4 = if pumped { dp(ap4, tn) } else { ZERO };

        for i in 0..NMODES {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        a_p += dt / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
        let finite = x
            .iter()
            .chain(std::iter::once(&a_p))
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(DynamicsError::NonFinite {
                index: k + 1,
                time: tn,
            });
        }
    }
    Ok(out)
}
