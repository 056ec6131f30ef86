//! Time propagation: fixed-step RK4 for the Schrodinger equation and for the
//! Lindblad master equation, with population and fidelity extraction.
//!
//! Per-step renormalization is deliberately off; norm and trace drift are the
//! convergence diagnostics, and exceeding their bounds is an error rather
//! than something to paper over.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Operator, StateVector};
use crate::output::fmt_sig;

/// Uniform time grid on [t_start, t_end] with n_steps RK4 steps.
#[derive(Clone, Copy, Debug)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

pub const DEFAULT_STEPS: usize = 10_000;

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if t_end <= t_start {
            return Err(Error::ParameterRange {
                name: "t_end",
                value: t_end,
                range: "(t_start, inf)",
            });
        }
        if n_steps < 100 {
            return Err(Error::ParameterRange {
                name: "n_steps",
                value: n_steps as f64,
                range: "[100, inf)",
            });
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    /// [0, 1] with the default resolution.
    pub fn unit() -> Self {
        Self {
            t_start: 0.0,
            t_end: 1.0,
            n_steps: DEFAULT_STEPS,
        }
    }

    pub fn with_steps(n_steps: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_steps)
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }
}

/// One dissipation channel: jump operator plus rate (1/T).
#[derive(Clone, Debug)]
pub struct CollapseChannel {
    pub operator: Operator,
    pub rate: f64,
}

impl CollapseChannel {
    pub fn new(operator: Operator, rate: f64) -> Self {
        assert!(rate.is_finite() && rate >= 0.0);
        Self { operator, rate }
    }

    /// |to><from| at the given rate.
    pub fn lowering(dim: usize, to: usize, from: usize, rate: f64) -> Self {
        Self::new(
            StateVector::basis(dim, to).outer(&StateVector::basis(dim, from)),
            rate,
        )
    }
}

/// Dissipator convention applied to the stored channel operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LindbladConvention {
    /// rate * (L rho L^dag - 1/2 {L^dag L, rho}); the stored operator is the
    /// jump operator. Trace-preserving.
    #[default]
    Standard,
    /// The transcription with the adjoint on the other side:
    /// rate * (L^dag rho L - 1/2 {L L^dag, rho}), i.e. the jump is L^dag.
    /// Exposed for inspection; for a cavity annihilation operator this pumps
    /// photons instead of losing them.
    AsPrinted,
}

/// Stored time series of states plus derived observables.
#[derive(Clone, Debug)]
pub enum States {
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    pub states: States,
    /// populations[k] is the time series of basis state k.
    pub populations: Vec<Vec<f64>>,
    /// |<target| rho |target>| versus time, when a target was supplied.
    pub fidelity: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    pub fn population_series(&self, k: usize) -> &[f64] {
        &self.populations[k]
    }

    pub fn final_population(&self, k: usize) -> f64 {
        *self.populations[k].last().unwrap()
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity.as_ref().map(|f| *f.last().unwrap())
    }

    /// Max over time of the sum of the selected populations.
    pub fn max_population_sum(&self, states: &[usize]) -> f64 {
        (0..self.times.len())
            .map(|i| states.iter().map(|&k| self.populations[k][i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with columns (s, P1..Pn, F); F column present only with a target.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let dim = self.dim();
        let mut header = vec!["s".to_string()];
        for k in 0..dim {
            header.push(format!("P{}", k + 1));
        }
        if self.fidelity.is_some() {
            header.push("F".to_string());
        }
        write!(w, "{}\r\n", header.join(","))?;
        for i in 0..self.times.len() {
            let mut cells = vec![fmt_sig(self.times[i])];
            for k in 0..dim {
                cells.push(fmt_sig(self.populations[k][i]));
            }
            if let Some(f) = &self.fidelity {
                cells.push(fmt_sig(f[i]));
            }
            write!(w, "{}\r\n", cells.join(","))?;
        }
        Ok(())
    }
}

/// |<target| rho |target>|.
pub fn fidelity(rho: &DensityMatrix, target: &StateVector) -> f64 {
    rho.expectation(target).norm()
}

fn mul_state(h: &Operator, v: &[C64], out: &mut [C64]) {
    let n = h.dim();
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            acc += h[(i, j)] * v[j];
        }
        out[i] = acc;
    }
}

/// Fixed-step RK4 integration of i d|psi>/ds = H(s) |psi>.
pub fn propagate_state(
    hamiltonian: &dyn Fn(f64) -> Operator,
    psi0: &StateVector,
    grid: &TimeGrid,
    target: Option<&StateVector>,
) -> Result<Trajectory> {
    let dim = psi0.dim();
    let n = grid.n_steps;
    let dt = grid.step();
    let minus_i = C64::new(0.0, -1.0);

    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    times.push(grid.t_start);
    states.push(StateVector::new(psi.clone()));

    for step in 0..n {
        let t = grid.t_start + step as f64 * dt;
        let h0 = hamiltonian(t);
        let hm = hamiltonian(t + 0.5 * dt);
        let h1 = hamiltonian(t + dt);
        if step % 100 == 0 {
            let dev = h0.hermiticity_deviation();
            if dev > 1e-9 * h0.max_abs().max(1.0) {
                return Err(Error::NonHermitian { deviation: dev });
            }
        }

        mul_state(&h0, &psi, &mut k1);
        for v in k1.iter_mut() {
            *v *= minus_i;
        }
        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * (0.5 * dt);
        }
        mul_state(&hm, &tmp, &mut k2);
        for v in k2.iter_mut() {
            *v *= minus_i;
        }
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * (0.5 * dt);
        }
        mul_state(&hm, &tmp, &mut k3);
        for v in k3.iter_mut() {
            *v *= minus_i;
        }
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * dt;
        }
        mul_state(&h1, &tmp, &mut k4);
        for v in k4.iter_mut() {
            *v *= minus_i;
        }
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }

        times.push(t + dt);
        states.push(StateVector::new(psi.clone()));
    }

    let drift = (states.last().unwrap().norm() - 1.0).abs();
    if drift > 1e-4 {
        return Err(Error::Accuracy {
            what: "state norm",
            drift,
            limit: 1e-4,
        });
    }

    let populations = (0..dim)
        .map(|k| states.iter().map(|s| s.population(k)).collect())
        .collect();
    let fid = target.map(|t| {
        states
            .iter()
            .map(|s| t.inner(s).norm_sqr())
            .collect::<Vec<f64>>()
    });
    Ok(Trajectory {
        grid: *grid,
        times,
        states: States::Pure(states),
        populations,
        fidelity: fid,
    })
}

struct PreparedChannel {
    jump: Operator,
    /// jump^dag jump, premultiplied by the rate.
    normal: Operator,
    rate: f64,
}

fn lindblad_rhs(h: &Operator, rho: &Operator, channels: &[PreparedChannel]) -> Operator {
    let n = rho.dim();
    // -i [H, rho]
    let hr = h * rho;
    let mut d = Operator::from_fn(n, |i, j| {
        (hr[(i, j)] - hr[(j, i)].conj()) * C64::new(0.0, -1.0)
    });
    for ch in channels {
        let l_rho = &ch.jump * rho;
        let l_rho_ldag = &l_rho * &ch.jump.adjoint();
        let nr = &ch.normal * rho;
        for i in 0..n {
            for j in 0..n {
                // rate * L rho L^dag - 1/2 (N rho + rho N), N = rate L^dag L
                d[(i, j)] += l_rho_ldag[(i, j)] * ch.rate
                    - (nr[(i, j)] + nr[(j, i)].conj()) * 0.5;
            }
        }
    }
    d
}

/// Fixed-step RK4 integration of the Lindblad master equation
/// d rho/ds = -i [H, rho] + sum_c rate_c (L rho L^dag - 1/2 {L^dag L, rho}).
pub fn propagate_lindblad(
    hamiltonian: &dyn Fn(f64) -> Operator,
    rho0: &DensityMatrix,
    channels: &[CollapseChannel],
    grid: &TimeGrid,
    target: Option<&StateVector>,
) -> Result<Trajectory> {
    propagate_lindblad_with(
        hamiltonian,
        rho0,
        channels,
        grid,
        target,
        LindbladConvention::Standard,
    )
}

/// As `propagate_lindblad`, with an explicit dissipator convention.
pub fn propagate_lindblad_with(
    hamiltonian: &dyn Fn(f64) -> Operator,
    rho0: &DensityMatrix,
    channels: &[CollapseChannel],
    grid: &TimeGrid,
    target: Option<&StateVector>,
    convention: LindbladConvention,
) -> Result<Trajectory> {
    let dim = rho0.dim();
    for ch in channels {
        if ch.operator.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: ch.operator.dim(),
            });
        }
    }
    let prepared: Vec<PreparedChannel> = channels
        .iter()
        .filter(|c| c.rate > 0.0)
        .map(|c| {
            let jump = match convention {
                LindbladConvention::Standard => c.operator.clone(),
                LindbladConvention::AsPrinted => c.operator.adjoint(),
            };
            let normal = (&jump.adjoint() * &jump).scale(C64::new(c.rate, 0.0));
            PreparedChannel {
                jump,
                normal,
                rate: c.rate,
            }
        })
        .collect();

    let n = grid.n_steps;
    let dt = grid.step();
    let mut rho = rho0.operator().clone();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(grid.t_start);
    states.push(DensityMatrix::from_operator_unchecked(rho.clone()));

    for step in 0..n {
        let t = grid.t_start + step as f64 * dt;
        let h0 = hamiltonian(t);
        let hm = hamiltonian(t + 0.5 * dt);
        let h1 = hamiltonian(t + dt);

        let k1 = lindblad_rhs(&h0, &rho, &prepared);
        let y2 = Operator::from_fn(dim, |i, j| rho[(i, j)] + k1[(i, j)] * (0.5 * dt));
        let k2 = lindblad_rhs(&hm, &y2, &prepared);
        let y3 = Operator::from_fn(dim, |i, j| rho[(i, j)] + k2[(i, j)] * (0.5 * dt));
        let k3 = lindblad_rhs(&hm, &y3, &prepared);
        let y4 = Operator::from_fn(dim, |i, j| rho[(i, j)] + k3[(i, j)] * dt);
        let k4 = lindblad_rhs(&h1, &y4, &prepared);
        rho = Operator::from_fn(dim, |i, j| {
            rho[(i, j)]
                + (k1[(i, j)] + (k2[(i, j)] + k3[(i, j)]) * 2.0 + k4[(i, j)]) * (dt / 6.0)
        });

        let tr = rho.trace();
        let trace_drift = ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt();
        if convention == LindbladConvention::Standard && trace_drift > 1e-5 {
            return Err(Error::Accuracy {
                what: "density-matrix trace",
                drift: trace_drift,
                limit: 1e-5,
            });
        }
        // Positivity is checked on a stride: a full eigensolve per step buys
        // nothing at these step sizes.
        if step % 100 == 99 || step == n - 1 {
            let herm = rho.hermiticity_deviation();
            if herm > 1e-10 {
                return Err(Error::Accuracy {
                    what: "density-matrix Hermiticity",
                    drift: herm,
                    limit: 1e-10,
                });
            }
            if convention == LindbladConvention::Standard {
                let min_eig = rho.min_eigenvalue()?;
                if min_eig < -1e-6 {
                    return Err(Error::Positivity { min_eig });
                }
            }
        }

        times.push(t + dt);
        states.push(DensityMatrix::from_operator_unchecked(rho.clone()));
    }

    let populations = (0..dim)
        .map(|k| states.iter().map(|r| r.populations()[k]).collect())
        .collect();
    let fid = target.map(|t| states.iter().map(|r| fidelity(r, t)).collect::<Vec<f64>>());
    Ok(Trajectory {
        grid: *grid,
        times,
        states: States::Mixed(states),
        populations,
        fidelity: fid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat_exp_skew, pauli, Axis};
    use crate::quad::adaptive_simpson;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 50).is_err());
        assert!(TimeGrid::new(1.0, 0.5, 1000).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 100).is_ok());
    }

    #[test]
    fn zero_hamiltonian_freezes_the_state() {
        let psi0 = StateVector::new(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
        ]);
        let grid = TimeGrid::with_steps(500).unwrap();
        let traj = propagate_state(&|_| Operator::zeros(2), &psi0, &grid, None).unwrap();
        if let States::Pure(states) = &traj.states {
            for s in states {
                assert!(s.distance_mod_phase(&psi0) < 1e-14);
            }
        }
    }

    #[test]
    fn constant_sigma_z_gives_diagonal_phases() {
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        let psi0 = StateVector::new(vec![
            C64::new(inv_sqrt2, 0.0),
            C64::new(inv_sqrt2, 0.0),
        ]);
        let grid = TimeGrid::new(0.0, 0.5 * PI, 2000).unwrap();
        let traj = propagate_state(&|_| pauli(Axis::Z), &psi0, &grid, None).unwrap();
        if let States::Pure(states) = &traj.states {
            let end = states.last().unwrap();
            let expect = StateVector::new(vec![
                C64::from_polar(inv_sqrt2, -0.5 * PI),
                C64::from_polar(inv_sqrt2, 0.5 * PI),
            ]);
            assert!(end.distance_mod_phase(&expect) < 1e-8);
        }
    }

    #[test]
    fn commuting_frame_oracle() {
        // For H(s) = f(s) sigma_z the exact propagator is
        // exp(-i (int f) sigma_z).
        let f = |s: f64| 1.3 * (2.0 * PI * s).sin() + 0.4;
        let psi0 = StateVector::new(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
        ]);
        let grid = TimeGrid::unit();
        let traj = propagate_state(
            &|s| pauli(Axis::Z).scale(C64::new(f(s), 0.0)),
            &psi0,
            &grid,
            None,
        )
        .unwrap();
        let phase = adaptive_simpson(f, 0.0, 1.0, 1e-12).unwrap();
        let u = mat_exp_skew(&pauli(Axis::Z), phase).unwrap();
        let expect = u.apply(&psi0);
        if let States::Pure(states) = &traj.states {
            let end = states.last().unwrap();
            for k in 0..2 {
                assert!((end[k] - expect[k]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        // End-state error against a 4x finer reference must shrink ~16x when
        // the step is halved, on the Case I two-level problem.
        let pulses = crate::two_level::design_case1(crate::two_level::Case1Schedule).unwrap();
        let h = move |s: f64| pulses.hamiltonian(s);
        let psi0 = StateVector::basis(2, 0);
        let run = |steps: usize| {
            let grid = TimeGrid::with_steps(steps).unwrap();
            let traj = propagate_state(&h, &psi0, &grid, None).unwrap();
            match &traj.states {
                States::Pure(states) => states.last().unwrap().clone(),
                _ => unreachable!(),
            }
        };
        let reference = run(8000);
        let err = |a: &StateVector| -> f64 {
            a.amplitudes()
                .iter()
                .zip(reference.amplitudes())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let e1 = err(&run(500));
        let e2 = err(&run(1000));
        let ratio = e1 / e2;
        assert!(
            (10.0..24.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio:.2} (e1={e1:.3e}, e2={e2:.3e})"
        );
    }

    #[test]
    fn norm_preserved_over_default_grid() {
        let pulses = crate::two_level::design_case1(crate::two_level::Case1Schedule).unwrap();
        let h = move |s: f64| pulses.hamiltonian(s);
        let traj = propagate_state(&h, &StateVector::basis(2, 0), &TimeGrid::unit(), None).unwrap();
        if let States::Pure(states) = &traj.states {
            for s in states {
                assert!((s.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn lindblad_with_no_channels_matches_pure_propagation() {
        let pulses = crate::two_level::design_case1(crate::two_level::Case1Schedule).unwrap();
        let h = move |s: f64| pulses.hamiltonian(s);
        let psi0 = StateVector::basis(2, 0);
        let grid = TimeGrid::with_steps(2000).unwrap();
        let pure = propagate_state(&h, &psi0, &grid, None).unwrap();
        let rho0 = DensityMatrix::pure(&psi0);
        let mixed = propagate_lindblad(&h, &rho0, &[], &grid, None).unwrap();
        for k in 0..2 {
            for i in [0, 500, 2000] {
                assert_abs_diff_eq!(
                    pure.populations[k][i],
                    mixed.populations[k][i],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn pure_exponential_decay() {
        // H = 0, single channel |g><e| at rate gamma: P_e(s) = exp(-gamma s).
        let gamma = 1.7;
        let rho0 = DensityMatrix::pure(&StateVector::basis(2, 1));
        let channels = [CollapseChannel::lowering(2, 0, 1, gamma)];
        let grid = TimeGrid::with_steps(2000).unwrap();
        let traj =
            propagate_lindblad(&|_| Operator::zeros(2), &rho0, &channels, &grid, None).unwrap();
        for (i, &t) in traj.times.iter().enumerate().step_by(100) {
            assert_abs_diff_eq!(traj.populations[1][i], (-gamma * t).exp(), epsilon = 1e-6);
        }
        // trace preserved to 1e-8 throughout
        if let States::Mixed(states) = &traj.states {
            for r in states {
                assert!((r.trace().re - 1.0).abs() < 1e-8);
                assert!(r.trace().im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn as_printed_convention_pumps_instead_of_decaying() {
        // Same channel, opposite convention: the population flows e <- g.
        let rho0 = DensityMatrix::pure(&StateVector::basis(2, 0));
        let channels = [CollapseChannel::lowering(2, 0, 1, 1.0)];
        let grid = TimeGrid::with_steps(1000).unwrap();
        let traj = propagate_lindblad_with(
            &|_| Operator::zeros(2),
            &rho0,
            &channels,
            &grid,
            None,
            LindbladConvention::AsPrinted,
        )
        .unwrap();
        assert!(traj.final_population(1) > 0.5);
    }

    #[test]
    fn fidelity_extremes() {
        let target = StateVector::basis(3, 2);
        let rho = DensityMatrix::pure(&target);
        assert_abs_diff_eq!(fidelity(&rho, &target), 1.0, epsilon = 1e-14);
        let orth = DensityMatrix::pure(&StateVector::basis(3, 0));
        assert_abs_diff_eq!(fidelity(&orth, &target), 0.0, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(6);
        assert_abs_diff_eq!(
            fidelity(&mixed, &StateVector::basis(6, 4)),
            1.0 / 6.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn populations_sum_to_trace() {
        let gamma = 0.8;
        let rho0 = DensityMatrix::pure(&StateVector::basis(3, 1));
        let channels = [
            CollapseChannel::lowering(3, 0, 1, gamma),
            CollapseChannel::lowering(3, 2, 1, gamma),
        ];
        let grid = TimeGrid::with_steps(1000).unwrap();
        let traj =
            propagate_lindblad(&|_| Operator::zeros(3), &rho0, &channels, &grid, None).unwrap();
        for i in (0..traj.times.len()).step_by(50) {
            let total: f64 = (0..3).map(|k| traj.populations[k][i]).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
            for k in 0..3 {
                assert!(traj.populations[k][i] >= -1e-9);
                assert!(traj.populations[k][i] <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let psi0 = StateVector::basis(2, 0);
        let grid = TimeGrid::with_steps(100).unwrap();
        let traj = propagate_state(
            &|_| pauli(Axis::X),
            &psi0,
            &grid,
            Some(&StateVector::basis(2, 1)),
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,P1,P2,F\r\n"));
        assert_eq!(text.lines().count(), 102);
    }
}
