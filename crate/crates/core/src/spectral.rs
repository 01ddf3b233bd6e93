//! Joint spectrum of commuting symmetric shifts.
//!
//! A common orthogonal eigenbasis is found by diagonalizing one random
//! generic linear combination of the shifts. With probability one the
//! combination separates the shared eigenspaces; a failed draw (detected via
//! the off-diagonal residual) is retried with fresh coefficients.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dense::{sym_eigen, DenseMatrix};
use crate::error::{CoreError, Result};
use crate::shift::{check_commuting, Shift, ShiftKind};

/// Common eigenbasis, joint eigenvalue tuples and the enclosing cube of a
/// family of commuting symmetric shifts.
#[derive(Debug, Clone)]
pub struct SpectralData {
    shifts: Vec<Arc<Shift>>,
    /// Columns are the common eigenvectors.
    basis: DenseMatrix,
    /// `lambda[i][k]` is the eigenvalue of shift `k` on eigenvector `i`.
    lambda: Vec<Vec<f64>>,
    /// Per-axis interval `[mu_k, nu_k]` containing the joint spectrum.
    cube: Vec<(f64, f64)>,
    seed: u64,
}

const MAX_ATTEMPTS: usize = 5;

impl SpectralData {
    /// Computes the joint spectrum. The commutator norm must be at most
    /// `1e-10 * n`; degenerate random combinations are retried up to five
    /// times before giving up.
    pub fn compute(shifts: Vec<Arc<Shift>>, seed: u64) -> Result<Self> {
        if shifts.is_empty() {
            return Err(CoreError::InvalidParameter("no shifts given".into()));
        }
        let n = shifts[0].dim();
        let refs: Vec<&Shift> = shifts.iter().map(|s| s.as_ref()).collect();
        let comm = check_commuting(&refs)?;
        let comm_tol = 1e-10 * n as f64;
        if comm > comm_tol {
            return Err(CoreError::InvalidShift(format!(
                "shifts do not commute: max commutator norm {comm:.3e} > {comm_tol:.3e}"
            )));
        }

        let dense: Vec<DenseMatrix> = shifts.iter().map(|s| s.to_dense()).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let residual_tol = 1e-8 * n as f64;
        let mut last_residual = f64::INFINITY;
        for _attempt in 0..MAX_ATTEMPTS {
            // random generic combination; first try weights each shift equally
            let coeffs: Vec<f64> = if shifts.len() == 1 {
                vec![1.0]
            } else {
                (0..shifts.len()).map(|_| rng.random_range(0.25..1.0)).collect()
            };
            let mut combo = DenseMatrix::zeros(n, n);
            for (c, m) in coeffs.iter().zip(dense.iter()) {
                combo = combo.add(&m.scale(*c));
            }
            let eig = match sym_eigen(&combo) {
                Ok(e) => e,
                Err(_) => continue,
            };
            let u = eig.vectors;
            // joint eigenvalues by Rayleigh quotients, residual by the
            // off-diagonal mass of U^T S_k U
            let mut lambda = vec![vec![0.0; shifts.len()]; n];
            let mut worst = 0.0f64;
            for (k, m) in dense.iter().enumerate() {
                let su = m.matmul(&u);
                let ut_su = u.transpose().matmul(&su);
                let mut off = 0.0;
                for i in 0..n {
                    lambda[i][k] = ut_su.get(i, i);
                    for j in 0..n {
                        if i != j {
                            off += ut_su.get(i, j) * ut_su.get(i, j);
                        }
                    }
                }
                worst = worst.max(off.sqrt());
            }
            last_residual = worst;
            if worst <= residual_tol {
                let cube = enclosing_cube(&shifts, &lambda);
                return Ok(Self { shifts, basis: u, lambda, cube, seed });
            }
        }
        Err(CoreError::JointDiagonalization { attempts: MAX_ATTEMPTS, residual: last_residual })
    }

    pub fn shifts(&self) -> &[Arc<Shift>] {
        &self.shifts
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.shifts[0].dim(), self.shifts.len())
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// Joint eigenvalue tuple of eigenvector `i`.
    pub fn lambda(&self, i: usize) -> &[f64] {
        &self.lambda[i]
    }

    pub fn lambdas(&self) -> &[Vec<f64>] {
        &self.lambda
    }

    pub fn cube(&self) -> &[(f64, f64)] {
        &self.cube
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Max over shifts of `||U^T S_k U - diag(lambda_k)||_F`.
    pub fn diagonalization_residual(&self) -> f64 {
        let (n, _) = self.dims();
        let mut worst = 0.0f64;
        for (k, s) in self.shifts.iter().enumerate() {
            let ut_su = self.basis.transpose().matmul(&s.to_dense().matmul(&self.basis));
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { self.lambda[i][k] } else { 0.0 };
                    let d = ut_su.get(i, j) - expect;
                    acc += d * d;
                }
            }
            worst = worst.max(acc.sqrt());
        }
        worst
    }

    /// `||U^T U - I||_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        let (n, _) = self.dims();
        self.basis.transpose().matmul(&self.basis).sub(&DenseMatrix::identity(n)).frobenius_norm()
    }
}

fn enclosing_cube(shifts: &[Arc<Shift>], lambda: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let d = shifts.len();
    let mut cube = Vec::with_capacity(d);
    for (k, shift) in shifts.iter().enumerate() {
        if shift.kind() == ShiftKind::NormalizedLaplacian {
            cube.push((0.0, 2.0));
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut amax = 0.0f64;
        for row in lambda {
            lo = lo.min(row[k]);
            hi = hi.max(row[k]);
            amax = amax.max(row[k].abs());
        }
        let pad = 1e-9 * (1.0 + amax);
        cube.push((lo - pad, hi + pad));
    }
    cube
}
