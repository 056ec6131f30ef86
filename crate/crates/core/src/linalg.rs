//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Every matrix in this crate is 2x2 through 6x6, stored row-major in a flat
//! `Vec<Complex64>`. Hamiltonians are Hermitian and dimensionless (units of
//! 1/T with hbar = 1); propagators and picture changes are unitary.

use num_complex::Complex64 as C64;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Cartesian axis label for the spin operator constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Dense complex square matrix (row-major).
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance to another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self * &self.adjoint();
        prod.max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim());
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.dim {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        StateVector::new(out)
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector::new((0..self.dim).map(|i| self[(i, j)]).collect())
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues in ascending order with the matching
    /// eigenvector columns, so that A = Q diag(w) Q^dagger.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Operator)> {
        let dev = self.hermiticity_deviation();
        let scale = self.max_abs().max(1.0);
        if dev > 1e-10 * scale {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let n = self.dim;
        // Work on the exactly-Hermitian part; roundoff asymmetry would
        // otherwise survive the rotations.
        let mut m = Operator::from_fn(n, |i, j| {
            if i == j {
                C64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()) * 0.5
            }
        });
        let mut q = Operator::identity(n);

        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for p in 0..n {
                for r in (p + 1)..n {
                    off += m[(p, r)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-14 * scale {
                let mut pairs: Vec<(f64, usize)> =
                    (0..n).map(|k| (m[(k, k)].re, k)).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let evals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let vecs = Operator::from_fn(n, |i, j| q[(i, pairs[j].1)]);
                return Ok((evals, vecs));
            }
            for p in 0..n - 1 {
                for r in (p + 1)..n {
                    let apr = m[(p, r)];
                    let abs = apr.norm();
                    if abs <= f64::EPSILON * scale {
                        m[(p, r)] = C64::new(0.0, 0.0);
                        m[(r, p)] = C64::new(0.0, 0.0);
                        continue;
                    }
                    let app = m[(p, p)].re;
                    let arr = m[(r, r)].re;
                    let phase = apr / abs;
                    // Annihilate m[p][r]: t solves t^2 - 2*tau*t - 1 = 0,
                    // smaller-magnitude root for stability.
                    let tau = (app - arr) / (2.0 * abs);
                    let t = if tau >= 0.0 {
                        -1.0 / (tau + (tau * tau + 1.0).sqrt())
                    } else {
                        1.0 / (-tau + (tau * tau + 1.0).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let sp = phase * s;

                    // Columns: B = M R with R = [[c, s*phase], [-s*conj(phase), c]].
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkr = m[(k, r)];
                        m[(k, p)] = mkp * c - mkr * sp.conj();
                        m[(k, r)] = mkp * sp + mkr * c;
                    }
                    // Rows: M' = R^dagger B.
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mrk = m[(r, k)];
                        m[(p, k)] = mpk * c - mrk * sp;
                        m[(r, k)] = mpk * sp.conj() + mrk * c;
                    }
                    m[(p, r)] = C64::new(0.0, 0.0);
                    m[(r, p)] = C64::new(0.0, 0.0);
                    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                    m[(r, r)] = C64::new(m[(r, r)].re, 0.0);

                    for k in 0..n {
                        let qkp = q[(k, p)];
                        let qkr = q[(k, r)];
                        q[(k, p)] = qkp * c - qkr * sp.conj();
                        q[(k, r)] = qkp * sp + qkr * c;
                    }
                }
            }
        }
        let mut off = 0.0f64;
        for p in 0..n {
            for r in (p + 1)..n {
                off += m[(p, r)].norm_sqr();
            }
        }
        Err(Error::EigenConvergence { off: off.sqrt() })
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (evals, _) = self.hermitian_eigen()?;
        Ok(evals[0])
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Normalized (or to-be-normalized) complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    data: Vec<C64>,
}

impl StateVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut data = vec![C64::new(0.0, 0.0); dim];
        data[index] = C64::new(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Self {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Outer product |self><other|.
    pub fn outer(&self, other: &StateVector) -> Operator {
        Operator::from_fn(self.dim(), |i, j| self.data[i] * other.data[j].conj())
    }

    pub fn population(&self, k: usize) -> f64 {
        self.data[k].norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.data
    }

    /// ||self - e^{i phi} other|| minimized over the global phase phi.
    pub fn distance_mod_phase(&self, other: &StateVector) -> f64 {
        let ov = self.inner(other);
        let phase = if ov.norm() > 1e-300 {
            ov.conj() / ov.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - phase * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, k: usize) -> &C64 {
        &self.data[k]
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validate the density-matrix invariants and wrap.
    pub fn new(op: Operator) -> Result<Self> {
        let dev = op.hermiticity_deviation();
        if dev > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min_eig = op.min_eigenvalue()?;
        if min_eig < -1e-8 {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { op })
    }

    /// Wrap without validation (for integrator internals).
    pub fn from_operator_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn pure(psi: &StateVector) -> Self {
        let psi = psi.normalized();
        Self {
            op: psi.outer(&psi),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn trace(&self) -> C64 {
        self.op.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.op[(k, k)].re).collect()
    }

    /// <target| rho |target>.
    pub fn expectation(&self, target: &StateVector) -> C64 {
        target.inner(&self.op.apply(target))
    }
}

/// Standard 2x2 Pauli matrix for the given axis.
pub fn pauli(axis: Axis) -> Operator {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match axis {
        Axis::X => Operator::from_rows(&[&[o, one], &[one, o]]),
        Axis::Y => Operator::from_rows(&[&[o, -i], &[i, o]]),
        Axis::Z => Operator::from_rows(&[&[one, o], &[o, -one]]),
    }
}

/// Spin-1 angular momentum matrix in the basis where J_z = diag(1, 0, -1);
/// normalization fixed by [J_x, J_y] = i J_z.
pub fn spin1(axis: Axis) -> Operator {
    let o = C64::new(0.0, 0.0);
    let r = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let ir = C64::new(0.0, 1.0 / 2.0_f64.sqrt());
    let one = C64::new(1.0, 0.0);
    match axis {
        Axis::X => Operator::from_rows(&[&[o, r, o], &[r, o, r], &[o, r, o]]),
        Axis::Y => Operator::from_rows(&[&[o, -ir, o], &[ir, o, -ir], &[o, ir, o]]),
        Axis::Z => Operator::from_rows(&[&[one, o, o], &[o, o, o], &[o, o, -one]]),
    }
}

/// Unitary basis change between the tridiagonal three-level form and the
/// spin-1 angular-momentum form: V^dagger H_tri V = Omega_x J_x + Omega_y J_y.
pub fn v_matrix() -> Operator {
    let o = C64::new(0.0, 0.0);
    let r = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let one = C64::new(1.0, 0.0);
    let ir = C64::new(0.0, 1.0 / 2.0_f64.sqrt());
    Operator::from_rows(&[&[r, o, r], &[o, one, o], &[ir, o, -ir]])
}

/// exp(-i * phase * H) for Hermitian H, computed by eigendecomposition;
/// exact to roundoff and unitary by construction.
pub fn mat_exp_skew(h: &Operator, phase: f64) -> Result<Operator> {
    let (evals, q) = h.hermitian_eigen()?;
    let n = h.dim();
    let qd = q.adjoint();
    let mut scaled = Operator::zeros(n);
    for j in 0..n {
        let ph = C64::from_polar(1.0, -phase * evals[j]);
        for i in 0..n {
            scaled[(i, j)] = q[(i, j)] * ph;
        }
    }
    Ok(&scaled * &qd)
}

/// [A, B] = AB - BA.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) - &(b * a)
}
