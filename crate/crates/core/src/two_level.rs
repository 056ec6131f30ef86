//! Inverse engineering of two-level Hamiltonians through the general SU(2)
//! rotation picture.
//!
//! A picture change R(theta, xi, eta) = e^{i(xi-eta)/2 sigma_z} e^{-i theta
//! sigma_y} e^{i(xi+eta)/2 sigma_z} turns H0 = g_x sigma_x + g_y sigma_y +
//! g_z sigma_z into H = R^dag H0 R + i (d_t R^dag) R. Demanding that H keep a
//! single Pauli axis fixes the pulse functions g_k in terms of the rotation
//! angles, and the evolution operator follows in closed form. Two built-in
//! recipes are provided, written as alpha = xi - eta, beta = xi + eta:
//!
//! * Case I: beta = 0, retained axis z. Boundary conditions theta: 0 ->
//!   pi/2, alpha: pi/2 -> pi/2 give a complete |1> -> |2> population
//!   transfer.
//! * Case II: alpha = 0, retained axis x, with a free amplitude parameter
//!   A1 in (0, 30*pi); theta: -pi/4 -> pi/4.
//!
//! All time arguments are normalized, s = t/T with T = 1.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{mat_exp_skew, pauli, Axis, Operator, StateVector};
use crate::output::fmt_sig;
use crate::quad::adaptive_simpson;

/// Snapshot of the rotation angles and their time derivatives at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationAngles {
    pub theta: f64,
    pub theta_dot: f64,
    /// alpha = xi - eta
    pub alpha: f64,
    pub alpha_dot: f64,
    /// beta = xi + eta
    pub beta: f64,
    pub beta_dot: f64,
}

impl RotationAngles {
    pub fn zero() -> Self {
        Self {
            theta: 0.0,
            theta_dot: 0.0,
            alpha: 0.0,
            alpha_dot: 0.0,
            beta: 0.0,
            beta_dot: 0.0,
        }
    }
}

/// Time-parameterized angle bundle driving a design.
pub trait AngleSchedule: Send + Sync + 'static {
    fn at(&self, s: f64) -> RotationAngles;

    /// (sin 2theta, cos 2theta) at `s`. The default goes through the stored
    /// theta, which loses all relative accuracy when theta is pinned a
    /// hair's breadth from a multiple of pi/2 (the f64 rounding of theta is
    /// then larger than the deviation itself). Schedules that drive theta to
    /// such a point and need the designed pulses there should override this
    /// with a cancellation-free form.
    fn trig_2theta(&self, s: f64) -> (f64, f64) {
        (2.0 * self.at(s).theta).sin_cos()
    }
}

/// R = e^{(i alpha/2) sigma_z} e^{-i theta sigma_y} e^{(i beta/2) sigma_z}.
pub fn rotation_matrix(angles: &RotationAngles) -> Operator {
    let (st, ct) = angles.theta.sin_cos();
    let half_sum = 0.5 * (angles.alpha + angles.beta); // xi
    let half_diff = 0.5 * (angles.alpha - angles.beta); // -eta... (alpha-beta)/2 = -eta
    Operator::from_rows(&[
        &[
            C64::from_polar(ct, half_sum),
            -C64::from_polar(st, half_diff),
        ],
        &[
            C64::from_polar(st, -half_diff),
            C64::from_polar(ct, -half_sum),
        ],
    ])
}

/// Pauli coefficients (h_x, h_y, h_z) of H = R^dag H0 R + i (d_t R^dag) R for
/// a bare Hamiltonian with coefficients `g` = (g_x, g_y, g_z).
pub fn transformed_coefficients(g: [f64; 3], a: &RotationAngles) -> [f64; 3] {
    let (gx, gy, gz) = (g[0], g[1], g[2]);
    let (sa, ca) = a.alpha.sin_cos();
    let (sb, cb) = a.beta.sin_cos();
    let (s2t, c2t) = (2.0 * a.theta).sin_cos();
    let (st, ct) = a.theta.sin_cos();

    let hx = gx * ca * cb * c2t - gx * sa * sb - gy * sa * cb * c2t - gy * ca * sb
        - gz * cb * s2t
        + a.theta_dot * sb
        - a.alpha_dot * cb * st * ct;
    let hy = gx * ca * sb * c2t + gx * sa * cb - gy * sa * sb * c2t + gy * ca * cb
        - gz * sb * s2t
        - a.theta_dot * cb
        - a.alpha_dot * sb * st * ct;
    let hz = gx * ca * s2t - gy * sa * s2t + gz * c2t + 0.5 * a.beta_dot
        + 0.5 * a.alpha_dot * c2t;
    [hx, hy, hz]
}

/// Built-in Case I angle schedule: quintic theta ramp 0 -> pi/2 with a small
/// symmetric alpha excursion around pi/2, all derivatives vanishing at the
/// endpoints.
#[derive(Clone, Copy, Debug, Default)]
pub struct Case1Schedule;

impl AngleSchedule for Case1Schedule {
    fn at(&self, s: f64) -> RotationAngles {
        let theta = 0.5 * PI * s * s * (10.0 - 20.0 * s + 15.0 * s * s - 4.0 * s * s * s);
        let theta_dot = 10.0 * PI * s * (1.0 - s).powi(3);
        let alpha = 0.5 * s * s * (1.0 - s) * (1.0 - s) + 0.5 * PI;
        let alpha_dot = s * (1.0 - s) * (1.0 - 2.0 * s);
        RotationAngles {
            theta,
            theta_dot,
            alpha,
            alpha_dot,
            beta: 0.0,
            beta_dot: 0.0,
        }
    }

    fn trig_2theta(&self, s: f64) -> (f64, f64) {
        if s > 0.5 {
            // theta pins to pi/2 at s = 1; the deviation obeys the exact
            // polynomial identity pi/2 - theta = (pi/2) h^4 (5 - 4h) with
            // h = 1 - s, so 2theta = pi - pi h^4 (5 - 4h).
            let h = 1.0 - s;
            let dev = PI * h.powi(4) * (5.0 - 4.0 * h);
            let (sd, cd) = dev.sin_cos();
            (sd, -cd)
        } else {
            (2.0 * self.at(s).theta).sin_cos()
        }
    }
}

/// Case I angles at normalized time `s`.
pub fn case1_schedules(s: f64) -> Result<RotationAngles> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ParameterRange {
            name: "s",
            value: s,
            range: "[0, 1]",
        });
    }
    Ok(Case1Schedule.at(s))
}

/// Built-in Case II angle schedule with amplitude parameter `a1`.
#[derive(Clone, Copy, Debug)]
pub struct Case2Schedule {
    pub a1: f64,
}

impl Case2Schedule {
    pub fn new(a1: f64) -> Result<Self> {
        if !(a1 > 0.0 && a1 < 30.0 * PI) {
            return Err(Error::ParameterRange {
                name: "A1",
                value: a1,
                range: "(0, 30*pi)",
            });
        }
        Ok(Self { a1 })
    }
}

impl AngleSchedule for Case2Schedule {
    fn at(&self, s: f64) -> RotationAngles {
        let beta = 0.5 * self.a1 * s * s * (1.0 - s) * (1.0 - s);
        let beta_dot = self.a1 * s * (1.0 - s) * (1.0 - 2.0 * s);
        let theta =
            PI * s.powi(4) * (17.5 - 42.0 * s + 35.0 * s * s - 10.0 * s * s * s) - 0.25 * PI;
        let theta_dot = 70.0 * PI * s.powi(3) * (1.0 - s).powi(3);
        RotationAngles {
            theta,
            theta_dot,
            alpha: 0.0,
            alpha_dot: 0.0,
            beta,
            beta_dot,
        }
    }
}

/// Case II angles at normalized time `s`.
pub fn case2_schedules(s: f64, a1: f64) -> Result<RotationAngles> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ParameterRange {
            name: "s",
            value: s,
            range: "[0, 1]",
        });
    }
    Ok(Case2Schedule::new(a1)?.at(s))
}

/// One sample of a designed pulse set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSample {
    pub g_x: f64,
    pub g_y: f64,
    pub g_z: f64,
    /// Coefficient retained on the single rotated-picture axis.
    pub f_residual: f64,
}

/// Designed pulse functions of normalized time, plus the retained
/// single-axis coefficient.
#[derive(Clone)]
pub struct TwoLevelPulses {
    source: Arc<dyn Fn(f64) -> PulseSample + Send + Sync>,
    residual_axis: Axis,
}

impl TwoLevelPulses {
    pub fn sample(&self, s: f64) -> PulseSample {
        (self.source)(s)
    }

    pub fn g_x(&self, s: f64) -> f64 {
        self.sample(s).g_x
    }

    pub fn g_y(&self, s: f64) -> f64 {
        self.sample(s).g_y
    }

    pub fn g_z(&self, s: f64) -> f64 {
        self.sample(s).g_z
    }

    pub fn f_residual(&self, s: f64) -> f64 {
        self.sample(s).f_residual
    }

    pub fn residual_axis(&self) -> Axis {
        self.residual_axis
    }

    /// H0(s) = g_x sigma_x + g_y sigma_y + g_z sigma_z.
    pub fn hamiltonian(&self, s: f64) -> Operator {
        let p = self.sample(s);
        let mut h = pauli(Axis::X).scale(C64::new(p.g_x, 0.0));
        if p.g_y != 0.0 {
            h = &h + &pauli(Axis::Y).scale(C64::new(p.g_y, 0.0));
        }
        &h + &pauli(Axis::Z).scale(C64::new(p.g_z, 0.0))
    }

    /// Pulse table with columns (s, g_x, g_y, g_z, f_residual) on a uniform
    /// grid of `n` rows.
    pub fn write_csv<W: Write>(&self, w: &mut W, n: usize) -> std::io::Result<()> {
        write!(w, "s,g_x,g_y,g_z,f_residual\r\n")?;
        for k in 0..n {
            let s = k as f64 / (n - 1) as f64;
            let p = self.sample(s);
            write!(
                w,
                "{},{},{},{},{}\r\n",
                fmt_sig(s),
                fmt_sig(p.g_x),
                fmt_sig(p.g_y),
                fmt_sig(p.g_z),
                fmt_sig(p.f_residual)
            )?;
        }
        Ok(())
    }
}

/// Scan the open interval for zeros of a schedule-derived denominator.
fn check_interior(denominator: impl Fn(f64) -> f64) -> Result<()> {
    for k in 1..1000 {
        let s = k as f64 / 1000.0;
        if denominator(s).abs() < 1e-10 {
            return Err(Error::SingularSchedule { s });
        }
    }
    Ok(())
}

const ENDPOINT_EPS: f64 = 1e-6;

/// Endpoint values are one-sided limits: the closed forms are 0/0 there, so
/// extrapolate linearly from s = eps, 2*eps (error O(eps^2)).
fn endpoint_limit(interior: &impl Fn(f64) -> PulseSample, at_zero: bool) -> PulseSample {
    let (s1, s2) = if at_zero {
        (ENDPOINT_EPS, 2.0 * ENDPOINT_EPS)
    } else {
        (1.0 - ENDPOINT_EPS, 1.0 - 2.0 * ENDPOINT_EPS)
    };
    let p1 = interior(s1);
    let p2 = interior(s2);
    PulseSample {
        g_x: 2.0 * p1.g_x - p2.g_x,
        g_y: 2.0 * p1.g_y - p2.g_y,
        g_z: 2.0 * p1.g_z - p2.g_z,
        f_residual: 2.0 * p1.f_residual - p2.f_residual,
    }
}

fn guarded_source(
    interior: impl Fn(f64) -> PulseSample + Send + Sync + 'static,
) -> Arc<dyn Fn(f64) -> PulseSample + Send + Sync> {
    let at0 = endpoint_limit(&interior, true);
    let at1 = endpoint_limit(&interior, false);
    Arc::new(move |s: f64| {
        if s <= 0.0 {
            at0
        } else if s >= 1.0 {
            at1
        } else {
            interior(s)
        }
    })
}

/// Case I design (beta = 0, retained axis z):
/// g_x = theta_dot / sin(alpha),
/// g_z = theta_dot cot(alpha) cot(2 theta) - alpha_dot / 2,
/// f_z = theta_dot cot(alpha) / sin(2 theta).
pub fn design_case1<S: AngleSchedule>(schedule: S) -> Result<TwoLevelPulses> {
    check_interior(|s| schedule.at(s).alpha.sin())?;
    let interior = move |s: f64| {
        let a = schedule.at(s);
        let (sa, ca) = a.alpha.sin_cos();
        let (s2t, c2t) = schedule.trig_2theta(s);
        let cot_alpha = ca / sa;
        // theta_dot / sin(2 theta) stays a well-conditioned ratio where both
        // vanish together.
        let td_over_s2t = a.theta_dot / s2t;
        PulseSample {
            g_x: a.theta_dot / sa,
            g_y: 0.0,
            g_z: td_over_s2t * c2t * cot_alpha - 0.5 * a.alpha_dot,
            f_residual: td_over_s2t * cot_alpha,
        }
    };
    Ok(TwoLevelPulses {
        source: guarded_source(interior),
        residual_axis: Axis::Z,
    })
}

/// Case II design (alpha = 0, retained axis x):
/// g_x = theta_dot cos(2 theta) cot(beta) - (beta_dot/2) sin(2 theta),
/// g_z = -theta_dot sin(2 theta) cot(beta) - (beta_dot/2) cos(2 theta),
/// f_x = theta_dot / sin(beta).
pub fn design_case2<S: AngleSchedule>(schedule: S) -> Result<TwoLevelPulses> {
    check_interior(|s| schedule.at(s).beta.sin())?;
    let interior = move |s: f64| {
        let a = schedule.at(s);
        let (sb, cb) = a.beta.sin_cos();
        let (s2t, c2t) = schedule.trig_2theta(s);
        let cot_beta = cb / sb;
        PulseSample {
            g_x: a.theta_dot * c2t * cot_beta - 0.5 * a.beta_dot * s2t,
            g_y: 0.0,
            g_z: -a.theta_dot * s2t * cot_beta - 0.5 * a.beta_dot * c2t,
            f_residual: a.theta_dot / sb,
        }
    };
    Ok(TwoLevelPulses {
        source: guarded_source(interior),
        residual_axis: Axis::X,
    })
}

/// Accumulated phase delta(s) = int_0^s f_residual ds'.
fn residual_phase(pulses: &TwoLevelPulses, s: f64) -> Result<f64> {
    adaptive_simpson(|u| pulses.f_residual(u), 0.0, s, 1e-10)
}

/// Closed-form evolution operator U_O(s) = R(s) e^{-i delta sigma_k} R(0)^dag
/// for a designed case; `U_O(0)` is the identity and U_O solves
/// i dU/ds = H0(s) U exactly.
fn evolution_operator<S: AngleSchedule>(
    schedule: &S,
    pulses: &TwoLevelPulses,
    s: f64,
) -> Result<Operator> {
    let delta = residual_phase(pulses, s)?;
    let r_s = rotation_matrix(&schedule.at(s));
    let r_0 = rotation_matrix(&schedule.at(0.0));
    let u_r = mat_exp_skew(&pauli(pulses.residual_axis()), delta)?;
    Ok(&(&r_s * &u_r) * &r_0.adjoint())
}

/// Case I evolution operator at normalized time `s`.
pub fn evolution_operator_case1<S: AngleSchedule + Clone>(
    schedule: &S,
    s: f64,
) -> Result<Operator> {
    let pulses = design_case1(schedule.clone())?;
    evolution_operator(schedule, &pulses, s)
}

/// Case II evolution operator at normalized time `s`.
pub fn evolution_operator_case2<S: AngleSchedule + Clone>(
    schedule: &S,
    s: f64,
) -> Result<Operator> {
    let pulses = design_case2(schedule.clone())?;
    evolution_operator(schedule, &pulses, s)
}

/// Columns of the evolution operator: the moving states |phi_n(s)>.
pub fn moving_states(u: &Operator) -> Vec<StateVector> {
    (0..u.dim()).map(|j| u.column(j)).collect()
}
