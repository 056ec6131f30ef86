//! SU(2)-symmetric three-level systems in the spin-1 representation.
//!
//! A tridiagonal three-level Hamiltonian with couplings (Omega_x, Omega_y)
//! conjugates under the fixed unitary V into Omega_x J_x + Omega_y J_y, where
//! the two-level rotation machinery carries over with sigma -> J. The beta=0
//! design retains only the J_z axis in the rotated picture.
//!
//! Schedules are stored as (theta, theta_dot, mu_dot, alpha(0)) and alpha is
//! reconstructed by quadrature from alpha_dot = -2 mu_dot cos(theta). That
//! removes the tan(theta)/cos(theta) endpoint singularities of the raw design
//! expressions (theta = pi/2 at both ends): the products stay finite, e.g.
//! (alpha_dot/2) cos(alpha/2) tan(theta) = -mu_dot sin(theta) cos(alpha/2).

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{mat_exp_skew, spin1, Axis, Operator};
use crate::output::fmt_sig;
use crate::quad::{adaptive_simpson, CumulativeIntegral};
use crate::two_level::RotationAngles;

/// Tridiagonal three-level Hamiltonian with couplings 1-2 = Omega_x and
/// 2-3 = Omega_y.
pub fn lambda_form(omega_x: f64, omega_y: f64) -> Operator {
    let o = C64::new(0.0, 0.0);
    let x = C64::new(omega_x, 0.0);
    let y = C64::new(omega_y, 0.0);
    Operator::from_rows(&[&[o, x, o], &[x, o, y], &[o, y, o]])
}

/// R' = e^{(i alpha/2) J_z} e^{-i theta J_y} e^{(i beta/2) J_z}.
pub fn rotation_spin1(alpha: f64, theta: f64, beta: f64) -> Operator {
    let ez1 = mat_exp_skew(&spin1(Axis::Z), -0.5 * alpha).expect("J_z is Hermitian");
    let ey = mat_exp_skew(&spin1(Axis::Y), theta).expect("J_y is Hermitian");
    let ez2 = mat_exp_skew(&spin1(Axis::Z), -0.5 * beta).expect("J_z is Hermitian");
    &(&ez1 * &ey) * &ez2
}

/// J-coefficients (h_x, h_y, h_z) of H' = R'^dag H0' R' + i (d_t R'^dag) R'
/// for H0' = Omega_x J_x + Omega_y J_y. Note the half angles on alpha and
/// beta but the full angle on theta.
pub fn transformed_coefficients_spin1(omega: [f64; 2], a: &RotationAngles) -> [f64; 3] {
    let (ox, oy) = (omega[0], omega[1]);
    let (sa, ca) = (0.5 * a.alpha).sin_cos();
    let (sb, cb) = (0.5 * a.beta).sin_cos();
    let (st, ct) = a.theta.sin_cos();

    let hx = ox * ca * cb * ct - ox * sa * sb - oy * sa * cb * ct - oy * ca * sb
        + a.theta_dot * sb
        - 0.5 * a.alpha_dot * cb * st;
    let hy = ox * ca * sb * ct + ox * sa * cb - oy * sa * sb * ct + oy * ca * cb
        - a.theta_dot * cb
        - 0.5 * a.alpha_dot * sb * st;
    let hz = ox * ca * st - oy * sa * st + 0.5 * a.beta_dot + 0.5 * a.alpha_dot * ct;
    [hx, hy, hz]
}

/// Schedule data for a beta = 0 spin-1 design.
pub trait Spin1Schedule: Send + Sync + 'static {
    fn theta(&self, s: f64) -> f64;
    fn theta_dot(&self, s: f64) -> f64;
    fn mu_dot(&self, s: f64) -> f64;
    fn alpha0(&self) -> f64;
}

/// One sample of the designed drive.
#[derive(Clone, Copy, Debug)]
pub struct Spin1Sample {
    /// J_x coefficient.
    pub omega_x: f64,
    /// J_y coefficient.
    pub omega_y: f64,
    /// Retained J_z coefficient in the rotated picture (equals -mu_dot).
    pub f_z: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// Designed three-level pulse functions.
#[derive(Clone)]
pub struct ThreeLevelPulses {
    source: Arc<dyn Fn(f64) -> Spin1Sample + Send + Sync>,
}

impl ThreeLevelPulses {
    pub fn sample(&self, s: f64) -> Spin1Sample {
        (self.source)(s)
    }

    pub fn omega_x(&self, s: f64) -> f64 {
        self.sample(s).omega_x
    }

    pub fn omega_y(&self, s: f64) -> f64 {
        self.sample(s).omega_y
    }

    pub fn f_z_prime(&self, s: f64) -> f64 {
        self.sample(s).f_z
    }

    /// H0'(s) in the angular-momentum form.
    pub fn hamiltonian_j(&self, s: f64) -> Operator {
        let p = self.sample(s);
        &spin1(Axis::X).scale(C64::new(p.omega_x, 0.0))
            + &spin1(Axis::Y).scale(C64::new(p.omega_y, 0.0))
    }

    /// The physical tridiagonal Hamiltonian H1' = V H0' V^dag.
    pub fn hamiltonian_lambda(&self, s: f64) -> Operator {
        let p = self.sample(s);
        lambda_form(p.omega_x, p.omega_y)
    }

    /// Pulse table with columns (s, Omega_1~, Omega_2~, alpha, theta).
    pub fn write_csv<W: Write>(&self, w: &mut W, n: usize) -> std::io::Result<()> {
        write!(w, "s,omega1_tilde,omega2_tilde,alpha,theta\r\n")?;
        for k in 0..n {
            let s = k as f64 / (n - 1) as f64;
            let p = self.sample(s);
            write!(
                w,
                "{},{},{},{},{}\r\n",
                fmt_sig(s),
                fmt_sig(p.omega_x),
                fmt_sig(p.omega_y),
                fmt_sig(p.alpha),
                fmt_sig(p.theta)
            )?;
        }
        Ok(())
    }
}

/// A beta = 0 design bound to a schedule, with the alpha reconstruction
/// cached once at construction (all later evaluation is read-only).
pub struct Spin1Design {
    schedule: Arc<dyn Spin1Schedule>,
    alpha_integral: CumulativeIntegral,
}

impl Spin1Design {
    pub fn new<S: Spin1Schedule>(schedule: S) -> Self {
        let schedule: Arc<dyn Spin1Schedule> = Arc::new(schedule);
        let sched = Arc::clone(&schedule);
        let integrand = move |s: f64| 2.0 * sched.mu_dot(s) * sched.theta(s).cos();
        let alpha_integral = CumulativeIntegral::new(Arc::new(integrand), 0.0, 1.0, 10_000);
        Self {
            schedule,
            alpha_integral,
        }
    }

    pub fn alpha(&self, s: f64) -> f64 {
        self.schedule.alpha0() - self.alpha_integral.eval(s)
    }

    pub fn alpha_dot(&self, s: f64) -> f64 {
        -2.0 * self.schedule.mu_dot(s) * self.schedule.theta(s).cos()
    }

    pub fn angles(&self, s: f64) -> RotationAngles {
        RotationAngles {
            theta: self.schedule.theta(s),
            theta_dot: self.schedule.theta_dot(s),
            alpha: self.alpha(s),
            alpha_dot: self.alpha_dot(s),
            beta: 0.0,
            beta_dot: 0.0,
        }
    }

    fn sample(&self, s: f64) -> Spin1Sample {
        let theta = self.schedule.theta(s);
        let theta_dot = self.schedule.theta_dot(s);
        let mu_dot = self.schedule.mu_dot(s);
        let alpha = self.alpha(s);
        let (sh, ch) = (0.5 * alpha).sin_cos();
        let st = theta.sin();
        Spin1Sample {
            omega_x: theta_dot * sh - mu_dot * st * ch,
            omega_y: theta_dot * ch + mu_dot * st * sh,
            f_z: -mu_dot,
            alpha,
            theta,
        }
    }

    pub fn pulses(self: &Arc<Self>) -> ThreeLevelPulses {
        let design = Arc::clone(self);
        ThreeLevelPulses {
            source: Arc::new(move |s| design.sample(s)),
        }
    }

    /// delta_z'(s) = int_0^s alpha_dot / cos(theta) ds' = -int_0^s 2 mu_dot.
    pub fn delta_z(&self, s: f64) -> Result<f64> {
        let sched = Arc::clone(&self.schedule);
        adaptive_simpson(move |u| -2.0 * sched.mu_dot(u), 0.0, s, 1e-10)
    }

    /// Rotated-picture evolution operator
    /// U_O'(s) = e^{(i alpha/2) J_z} e^{-i theta J_y} e^{-(i delta_z'/2) J_z};
    /// at s = 0 this equals R'(0), not the identity.
    pub fn evolution_operator(&self, s: f64) -> Result<Operator> {
        let delta = self.delta_z(s)?;
        let r = rotation_spin1(self.alpha(s), self.schedule.theta(s), 0.0);
        let u_r = mat_exp_skew(&spin1(Axis::Z), 0.5 * delta)?;
        Ok(&r * &u_r)
    }

    /// True propagator in the V picture: evolution_operator(s) * R'(0)^dag,
    /// identity at s = 0 and an exact solution of i dU/ds = H0'(s) U.
    pub fn propagator(&self, s: f64) -> Result<Operator> {
        let u = self.evolution_operator(s)?;
        let r0 = rotation_spin1(self.alpha(0.0), self.schedule.theta(0.0), 0.0);
        Ok(&u * &r0.adjoint())
    }
}

/// Build the beta = 0 design for a schedule.
pub fn design_spin1_beta0<S: Spin1Schedule>(schedule: S) -> Arc<Spin1Design> {
    Arc::new(Spin1Design::new(schedule))
}

/// The raw tan(theta)-form design expressions, for cross-checking against the
/// reformulated ones. Errors where cos(theta) vanishes with alpha_dot not
/// vanishing at matching order.
pub fn omega_from_angles_tan_form(a: &RotationAngles) -> Result<(f64, f64)> {
    let ct = a.theta.cos();
    if ct.abs() < 1e-9 && a.alpha_dot.abs() > 1e6 * ct.abs() {
        return Err(Error::SingularSchedule { s: f64::NAN });
    }
    let tan = a.theta.tan();
    let (sh, ch) = (0.5 * a.alpha).sin_cos();
    Ok((
        a.theta_dot * sh + 0.5 * a.alpha_dot * ch * tan,
        a.theta_dot * ch - 0.5 * a.alpha_dot * sh * tan,
    ))
}

/// Moving state of the transfer in the V picture:
/// (-sin(theta) e^{i alpha/2}, sqrt(2) cos(theta), sin(theta) e^{-i alpha/2}) / sqrt(2).
pub fn transfer_moving_state(alpha: f64, theta: f64) -> crate::linalg::StateVector {
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    crate::linalg::StateVector::new(vec![
        -C64::from_polar(theta.sin() * inv_sqrt2, 0.5 * alpha),
        C64::new(theta.cos(), 0.0),
        C64::from_polar(theta.sin() * inv_sqrt2, -0.5 * alpha),
    ])
}
