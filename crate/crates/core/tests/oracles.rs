//! Heavier module invariants: propagator oracles under random schedule
//! perturbations, effective-vs-full model agreement, monotonicity of the
//! decoherence table, and a few property tests.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use su2sta::dynamics::{propagate_state, States, TimeGrid, DEFAULT_STEPS};
use su2sta::experiments::lindblad_final_fidelity;
use su2sta::linalg::{mat_exp_skew, pauli, Axis, Operator, StateVector};
use su2sta::nv::{
    default_gaussian_pulses, effective_hamiltonian, full_hamiltonian, DecayModel, NvConfig,
};
use su2sta::two_level::{
    design_case1, design_case2, evolution_operator_case1, evolution_operator_case2,
    rotation_matrix, AngleSchedule, Case1Schedule, Case2Schedule, RotationAngles,
};

/// Smooth bump vanishing with its derivative at both endpoints.
fn bump(s: f64) -> f64 {
    s * s * (1.0 - s) * (1.0 - s)
}

fn bump_dot(s: f64) -> f64 {
    2.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// Quartic bump: matches the h^4 endpoint order of the case I theta ramp, so
/// a perturbed theta still approaches its boundary values from inside
/// (0, pi/2) and sin(2 theta) keeps no interior zero.
fn bump4(s: f64) -> f64 {
    (s * (1.0 - s)).powi(4)
}

fn bump4_dot(s: f64) -> f64 {
    4.0 * (s * (1.0 - s)).powi(3) * (1.0 - 2.0 * s)
}

/// Cubic bump: theta_dot then vanishes one order faster than sin(beta) at
/// the case II endpoints, keeping the designed pulses integrable.
fn bump3(s: f64) -> f64 {
    (s * (1.0 - s)).powi(3)
}

fn bump3_dot(s: f64) -> f64 {
    3.0 * (s * (1.0 - s)).powi(2) * (1.0 - 2.0 * s)
}

/// Case I schedule with boundary-respecting random perturbations of theta
/// and alpha.
#[derive(Clone)]
struct PerturbedCase1 {
    c_theta: f64,
    c_alpha: f64,
}

impl AngleSchedule for PerturbedCase1 {
    fn at(&self, s: f64) -> RotationAngles {
        let mut a = Case1Schedule.at(s);
        a.theta += self.c_theta * bump4(s);
        a.theta_dot += self.c_theta * bump4_dot(s);
        a.alpha += self.c_alpha * bump(s);
        a.alpha_dot += self.c_alpha * bump_dot(s);
        a
    }
}

/// Case II schedule with boundary-respecting random perturbations of theta
/// and beta (the beta perturbation keeps sin(beta) positive on the interior).
#[derive(Clone)]
struct PerturbedCase2 {
    base: Case2Schedule,
    c_theta: f64,
    c_beta: f64,
}

impl AngleSchedule for PerturbedCase2 {
    fn at(&self, s: f64) -> RotationAngles {
        let mut a = self.base.at(s);
        a.theta += self.c_theta * bump3(s);
        a.theta_dot += self.c_theta * bump3_dot(s);
        a.beta += self.c_beta * bump(s);
        a.beta_dot += self.c_beta * bump_dot(s);
        a
    }
}

fn propagate_operator(h: &dyn Fn(f64) -> Operator, dim: usize, steps: usize) -> Operator {
    let mut u = Operator::zeros(dim);
    for col in 0..dim {
        let traj = propagate_state(
            h,
            &StateVector::basis(dim, col),
            &TimeGrid::with_steps(steps).unwrap(),
            None,
        )
        .unwrap();
        if let States::Pure(states) = &traj.states {
            let end = states.last().unwrap();
            for row in 0..dim {
                u[(row, col)] = end[row];
            }
        }
    }
    u
}

#[test]
fn case1_propagator_oracle_under_random_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let sched = PerturbedCase1 {
            c_theta: rng.gen_range(-2.0..2.0),
            c_alpha: rng.gen_range(-0.6..0.6),
        };
        let pulses = design_case1(sched.clone()).unwrap();
        let h = move |s: f64| pulses.hamiltonian(s);
        let analytic = evolution_operator_case1(&sched, 1.0).unwrap();
        let numeric = propagate_operator(&h, 2, DEFAULT_STEPS);
        worst = worst.max(analytic.max_abs_diff(&numeric));
    }
    assert!(worst < 1e-6, "worst case I perturbation error {worst:.2e}");
}

#[test]
fn case2_propagator_oracle_under_random_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4048);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let sched = PerturbedCase2 {
            base: Case2Schedule::new(8.0 * PI).unwrap(),
            c_theta: rng.gen_range(-1.0..1.0),
            c_beta: rng.gen_range(-2.0..2.0),
        };
        let pulses = design_case2(sched.clone()).unwrap();
        let h = move |s: f64| pulses.hamiltonian(s);
        let analytic = evolution_operator_case2(&sched, 1.0).unwrap();
        let numeric = propagate_operator(&h, 2, DEFAULT_STEPS);
        worst = worst.max(analytic.max_abs_diff(&numeric));
    }
    assert!(worst < 1e-6, "worst case II perturbation error {worst:.2e}");
}

#[test]
fn effective_model_agrees_with_full_model_at_reference_coupling() {
    let pulses = default_gaussian_pulses();
    let full = {
        let h = |s: f64| full_hamiltonian(s, pulses, 30.0);
        propagate_state(
            &h,
            &StateVector::basis(6, 0),
            &TimeGrid::unit(),
            None,
        )
        .unwrap()
        .final_population(4)
    };
    let effective = {
        let h = |s: f64| effective_hamiltonian(s, pulses);
        propagate_state(
            &h,
            &StateVector::basis(3, 0),
            &TimeGrid::unit(),
            None,
        )
        .unwrap()
        .final_population(2)
    };
    assert!(
        (full - effective).abs() < 0.01,
        "full {full:.5} vs effective {effective:.5}"
    );
}

#[test]
fn decoherence_table_diagonal_is_strictly_decreasing() {
    let config = NvConfig::reference();
    let mut previous = f64::INFINITY;
    for ratio in [0.02, 0.03, 0.04] {
        let mut c = config;
        c.kappa = ratio * config.lambda;
        c.gamma = ratio * config.lambda;
        let f = lindblad_final_fidelity(
            &c,
            default_gaussian_pulses(),
            DecayModel::Calibrated,
            DEFAULT_STEPS,
        )
        .unwrap();
        assert!(f < previous, "F({ratio}) = {f} not decreasing");
        previous = f;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_matrix_is_always_unitary(
        theta in -6.0f64..6.0,
        alpha in -6.0f64..6.0,
        beta in -6.0f64..6.0,
    ) {
        let angles = RotationAngles { theta, theta_dot: 0.0, alpha, alpha_dot: 0.0, beta, beta_dot: 0.0 };
        prop_assert!(rotation_matrix(&angles).is_unitary(1e-12));
    }

    #[test]
    fn pauli_exponentials_compose(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let x = pauli(Axis::X);
        let uab = mat_exp_skew(&x, a + b).unwrap();
        let ua_ub = &mat_exp_skew(&x, a).unwrap() * &mat_exp_skew(&x, b).unwrap();
        prop_assert!(uab.max_abs_diff(&ua_ub) < 1e-10);
    }

    #[test]
    fn cumulative_integral_matches_adaptive_quadrature(x in 0.0f64..1.0) {
        use std::sync::Arc;
        let f = |u: f64| (5.0 * u).sin() * u.exp();
        let cum = su2sta::quad::CumulativeIntegral::new(Arc::new(f), 0.0, 1.0, 2000);
        let direct = su2sta::quad::adaptive_simpson(f, 0.0, x, 1e-13).unwrap();
        prop_assert!((cum.eval(x) - direct).abs() < 1e-10);
    }
}
