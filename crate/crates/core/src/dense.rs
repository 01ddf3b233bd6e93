//! Small dense linear algebra used by spectral computations and test oracles.
//!
//! The symmetric eigensolver is a Householder tridiagonalization followed by
//! the implicit-shift QL iteration, with the off-diagonal deflation threshold
//! tied to the Frobenius norm of the input. It is deterministic and intended
//! for matrices up to a few thousand rows.

use crate::error::{CoreError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = values[i];
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn add(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// Solves Ax = b by LU factorization with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.len());
        let n = self.rows;
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[perm[col] * n + col].abs();
            for r in col + 1..n {
                let v = lu[perm[r] * n + col].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return Err(CoreError::SingularMatrix);
            }
            perm.swap(col, pivot);
            let prow = perm[col];
            let pval = lu[prow * n + col];
            for r in col + 1..n {
                let row = perm[r];
                let factor = lu[row * n + col] / pval;
                lu[row * n + col] = factor;
                for c in col + 1..n {
                    lu[row * n + c] -= factor * lu[prow * n + c];
                }
            }
        }
        // forward substitution on permuted rows
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[perm[i]];
            for j in 0..i {
                acc -= lu[perm[i] * n + j] * y[j];
            }
            y[i] = acc;
        }
        // back substitution
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= lu[perm[i] * n + j] * x[j];
            }
            x[i] = acc / lu[perm[i] * n + i];
        }
        Ok(x)
    }

    /// Matrix inverse via column-by-column LU solves.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigendecomposition of a symmetric matrix: `values[k]` belongs to the
/// `k`-th column of `vectors`. Eigenvalues are sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Symmetric eigendecomposition by Householder reduction + implicit QL.
///
/// `a` must be symmetric; only the lower triangle is trusted. The subdiagonal
/// deflation threshold is `1e-12 * ||A||_F`, floored by the machine-relative
/// test, so accuracy tracks the input scale.
pub fn sym_eigen(a: &DenseMatrix) -> Result<SymEigen> {
    let frob = a.frobenius_norm();
    sym_eigen_with_tol(a, 1e-12 * frob)
}

/// Like [`sym_eigen`] with an explicit absolute deflation tolerance
/// (pass `0.0` for machine-relative deflation only).
pub fn sym_eigen_with_tol(a: &DenseMatrix, abs_tol: f64) -> Result<SymEigen> {
    assert_eq!(a.rows, a.cols, "sym_eigen needs a square matrix");
    let n = a.rows;
    if n == 0 {
        return Ok(SymEigen { values: vec![], vectors: DenseMatrix::zeros(0, 0) });
    }
    let mut z = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, n, &mut d, &mut e);
    tql2(&mut d, &mut e, &mut z, n, abs_tol)?;

    // sort ascending, permuting eigenvector columns
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.data[r * n + new_col] = z[r * n + old_col];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_lambda_max(a: &DenseMatrix) -> Result<f64> {
    let eig = sym_eigen(a)?;
    Ok(*eig.values.last().expect("nonempty spectrum"))
}

/// Symmetric square root `B` with `B B = A`, for positive semidefinite `A`.
/// Eigenvalues below `-tol` are rejected; small negatives are clamped to zero.
pub fn sym_sqrt(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let eig = sym_eigen(a)?;
    let n = a.rows;
    for &v in &eig.values {
        if v < -tol {
            return Err(CoreError::InvalidParameter(format!(
                "matrix is not positive semidefinite (eigenvalue {v:.3e})"
            )));
        }
    }
    let u = &eig.vectors;
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += u.get(i, k) * eig.values[k].max(0.0).sqrt() * u.get(j, k);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Householder reduction of a symmetric matrix (row-major in `a`) to
/// tridiagonal form, accumulating the orthogonal transform into `a`.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let mut f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = 0.0;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on a tridiagonal matrix, rotating the columns of `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize, abs_tol: f64) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd + abs_tol {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(CoreError::EigenNoConvergence(iter));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_orthogonality(u: &DenseMatrix) -> f64 {
        u.transpose().matmul(u).sub(&DenseMatrix::identity(u.rows)).frobenius_norm()
    }

    #[test]
    fn eigen_diagonal_matrix() {
        let a = DenseMatrix::diag(&[3.0, -1.0, 2.0]);
        let eig = sym_eigen(&a).unwrap();
        assert_eq!(eig.values.len(), 3);
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        assert!((eig.values[2] - 3.0).abs() < 1e-14);
        assert!(residual_orthogonality(&eig.vectors) < 1e-13);
    }

    #[test]
    fn eigen_2x2_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let a = DenseMatrix { rows: 2, cols: 2, data: vec![2.0, 1.0, 1.0, 2.0] };
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for n in [1usize, 2, 3, 5, 17, 40] {
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            let eig = sym_eigen(&a).unwrap();
            // U diag(λ) U^T == A
            let ut = eig.vectors.transpose();
            let rec = eig.vectors.matmul(&DenseMatrix::diag(&eig.values)).matmul(&ut);
            let err = rec.sub(&a).frobenius_norm() / a.frobenius_norm().max(1.0);
            assert!(err < 1e-11, "n={n} reconstruction error {err}");
            assert!(residual_orthogonality(&eig.vectors) < 1e-11);
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn eigen_handles_repeated_eigenvalues() {
        // 4-cycle Laplacian-like structure: eigenvalues 0, 2, 2, 4
        let a = DenseMatrix {
            rows: 4,
            cols: 4,
            data: vec![
                2.0, -1.0, 0.0, -1.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                -1.0, 0.0, -1.0, 2.0,
            ],
        };
        let eig = sym_eigen(&a).unwrap();
        let expect = [0.0, 2.0, 2.0, 4.0];
        for (v, e) in eig.values.iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }
    }

    #[test]
    fn solve_and_inverse() {
        let a = DenseMatrix { rows: 3, cols: 3, data: vec![4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0] };
        let b = vec![1.0, 2.0, 3.0];
        let x = a.solve(&b).unwrap();
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        assert!(prod.sub(&DenseMatrix::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DenseMatrix { rows: 2, cols: 2, data: vec![1.0, 2.0, 2.0, 4.0] };
        assert!(matches!(a.solve(&[1.0, 1.0]), Err(CoreError::SingularMatrix)));
    }

    #[test]
    fn sqrt_of_psd() {
        let a = DenseMatrix { rows: 2, cols: 2, data: vec![2.0, 1.0, 1.0, 2.0] };
        let s = sym_sqrt(&a, 1e-12).unwrap();
        let back = s.matmul(&s);
        assert!(back.sub(&a).frobenius_norm() < 1e-12);
    }
}
