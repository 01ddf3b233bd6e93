//! Jacobi polynomials, their norms and Gauss–Jacobi quadrature.
//!
//! Everything is parameterized by `alpha, beta > -1`. Chebyshev polynomials
//! (first kind) are the special case `alpha = beta = -1/2` up to a
//! value-at-one normalization; they get their own small helpers because the
//! interpolation path works directly in the `T_n` basis.

use crate::dense::{sym_eigen_with_tol, DenseMatrix};
use crate::error::{CoreError, Result};

const CACHED_DEGREE: usize = 128;

/// Univariate Jacobi basis with cached recurrence coefficients and norms.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    pub alpha: f64,
    pub beta: f64,
    /// `rec[n]` holds `(a_{n,1}, a_{n,2}, a_{n,3})` for `n >= 2`.
    rec: Vec<(f64, f64, f64)>,
    /// `norms[n]` is `gamma_n`, the squared weighted L2 norm of `P_n` on `[-1,1]`.
    norms: Vec<f64>,
}

impl JacobiBasis {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha.is_finite()) || !(beta > -1.0 && beta.is_finite()) {
            return Err(CoreError::InvalidParameter(format!(
                "Jacobi parameters must be > -1, got alpha={alpha}, beta={beta}"
            )));
        }
        let rec = (0..=CACHED_DEGREE).map(|n| recurrence_coeffs(n, alpha, beta)).collect();
        let norms = (0..=CACHED_DEGREE).map(|n| norm_gamma(n, alpha, beta)).collect();
        Ok(Self { alpha, beta, rec, norms })
    }

    /// `(a_{n,1}, a_{n,2}, a_{n,3})` of the three-term recurrence, `n >= 2`.
    pub fn recurrence(&self, n: usize) -> (f64, f64, f64) {
        if n <= CACHED_DEGREE {
            self.rec[n]
        } else {
            recurrence_coeffs(n, self.alpha, self.beta)
        }
    }

    /// Squared weighted norm `gamma_n` of `P_n^{(alpha,beta)}` on `[-1, 1]`.
    pub fn gamma(&self, n: usize) -> f64 {
        if n <= CACHED_DEGREE {
            self.norms[n]
        } else {
            norm_gamma(n, self.alpha, self.beta)
        }
    }

    /// Evaluates `P_n^{(alpha,beta)}(t)` by the three-term recurrence.
    /// Arguments outside `[-1, 1]` extrapolate; no range check is made.
    pub fn eval(&self, n: usize, t: f64) -> f64 {
        match n {
            0 => 1.0,
            1 => self.p1(t),
            _ => {
                let mut prev = 1.0;
                let mut cur = self.p1(t);
                for k in 2..=n {
                    let (a1, a2, a3) = self.recurrence(k);
                    let next = (a1 * t - a2) * cur - a3 * prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    }

    /// Fills `out` with `P_0(t), ..., P_max(t)`.
    pub fn eval_all(&self, max_n: usize, t: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if max_n == 0 {
            return;
        }
        out.push(self.p1(t));
        for k in 2..=max_n {
            let (a1, a2, a3) = self.recurrence(k);
            let next = (a1 * t - a2) * out[k - 1] - a3 * out[k - 2];
            out.push(next);
        }
    }

    fn p1(&self, t: f64) -> f64 {
        0.5 * (self.alpha + self.beta + 2.0) * t + 0.5 * (self.alpha - self.beta)
    }

    /// Jacobi weight `(1-t)^alpha (1+t)^beta` on `(-1, 1)`.
    pub fn weight(&self, t: f64) -> f64 {
        (1.0 - t).powf(self.alpha) * (1.0 + t).powf(self.beta)
    }

    /// Total weight mass `int_{-1}^1 w(t) dt`.
    pub fn weight_mass(&self) -> f64 {
        self.gamma(0)
    }
}

fn recurrence_coeffs(n: usize, alpha: f64, beta: f64) -> (f64, f64, f64) {
    if n < 2 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = n as f64;
    let s = alpha + beta;
    let a1 = (2.0 * n + s - 1.0) * (2.0 * n + s) / (2.0 * n * (n + s));
    let a2 = (beta * beta - alpha * alpha) * (2.0 * n + s - 1.0)
        / (2.0 * n * (n + s) * (2.0 * n + s - 2.0));
    let a3 = (n + alpha - 1.0) * (n + beta - 1.0) * (2.0 * n + s)
        / (n * (n + s) * (2.0 * n + s - 2.0));
    (a1, a2, a3)
}

/// Squared weighted L2 norm of `P_n^{(alpha,beta)}` on `[-1, 1]`, evaluated
/// in the log-Gamma domain. The `n = 0` case is rewritten through
/// `Gamma(alpha+beta+2)` so parameter sums at or below `-1` stay finite.
pub fn norm_gamma(n: usize, alpha: f64, beta: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    if n == 0 {
        return ((alpha + beta + 1.0) * ln2 + libm::lgamma(alpha + 1.0)
            + libm::lgamma(beta + 1.0)
            - libm::lgamma(alpha + beta + 2.0))
        .exp();
    }
    let nf = n as f64;
    let log = (alpha + beta + 1.0) * ln2 - (2.0 * nf + alpha + beta + 1.0).ln()
        + libm::lgamma(nf + alpha + 1.0)
        + libm::lgamma(nf + beta + 1.0)
        - libm::lgamma(nf + alpha + beta + 1.0)
        - libm::lgamma(nf + 1.0);
    log.exp()
}

/// Squared weighted norm of the rescaled tensor basis polynomial indexed by
/// `ns` on the cube: `2^{-d} |cube| * prod_i gamma_{n_i}`.
pub fn tensor_norm(basis: &JacobiBasis, ns: &[usize], cube: &[(f64, f64)]) -> f64 {
    assert_eq!(ns.len(), cube.len());
    let d = ns.len();
    let volume: f64 = cube.iter().map(|(lo, hi)| hi - lo).product();
    let gammas: f64 = ns.iter().map(|&n| basis.gamma(n)).product();
    0.5f64.powi(d as i32) * volume * gammas
}

/// Gauss–Jacobi rule on `[-1, 1]`: `m` nodes and weights, exact for
/// polynomials of degree `<= 2m-1` against the weight `(1-t)^alpha (1+t)^beta`.
/// Built by the Golub–Welsch eigendecomposition of the symmetric recurrence
/// matrix; the `k = 1` off-diagonal entry is algebraically cancelled so the
/// degenerate case `alpha + beta = -1` (e.g. the Chebyshev weight) stays finite.
pub fn gauss_jacobi(alpha: f64, beta: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(alpha > -1.0) || !(beta > -1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "Gauss-Jacobi needs alpha, beta > -1, got ({alpha}, {beta})"
        )));
    }
    if m == 0 {
        return Err(CoreError::InvalidParameter("node count must be >= 1".into()));
    }
    let s = alpha + beta;
    let mass = norm_gamma(0, alpha, beta);
    let mut diag = vec![0.0; m];
    diag[0] = (beta - alpha) / (s + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let k = k as f64;
        *d = (beta * beta - alpha * alpha) / ((2.0 * k + s) * (2.0 * k + s + 2.0));
    }
    let mut offdiag = vec![0.0; m]; // offdiag[k] couples k-1 and k
    for (k, od) in offdiag.iter_mut().enumerate().skip(1) {
        let b2 = if k == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s) * (2.0 + s) * (3.0 + s))
        } else {
            let k = k as f64;
            4.0 * k * (k + alpha) * (k + beta) * (k + s)
                / ((2.0 * k + s) * (2.0 * k + s) * (2.0 * k + s + 1.0) * (2.0 * k + s - 1.0))
        };
        *od = b2.sqrt();
    }
    let mut jm = DenseMatrix::zeros(m, m);
    for k in 0..m {
        jm.set(k, k, diag[k]);
        if k > 0 {
            jm.set(k, k - 1, offdiag[k]);
            jm.set(k - 1, k, offdiag[k]);
        }
    }
    let eig = sym_eigen_with_tol(&jm, 0.0)?;
    let nodes = eig.values;
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let v = eig.vectors.get(0, j);
            mass * v * v
        })
        .collect();
    Ok((nodes, weights))
}

/// Rescaled Chebyshev points on one axis:
/// `t_j = (nu+mu)/2 + ((nu-mu)/2) cos((j - 1/2) pi / (M+1))`, `j = 1..M+1`.
pub fn chebyshev_nodes_axis(m_degree: usize, interval: (f64, f64)) -> Vec<f64> {
    let (mu, nu) = interval;
    let mid = 0.5 * (nu + mu);
    let half = 0.5 * (nu - mu);
    (1..=m_degree + 1)
        .map(|j| {
            mid + half * ((j as f64 - 0.5) * std::f64::consts::PI / (m_degree + 1) as f64).cos()
        })
        .collect()
}

/// Tensor grid of `(M+1)^d` rescaled Chebyshev points on the cube,
/// in row-major order (last axis fastest).
pub fn chebyshev_nodes(m_degree: usize, cube: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = cube.iter().map(|&iv| chebyshev_nodes_axis(m_degree, iv)).collect();
    let d = cube.len();
    let per_axis = m_degree + 1;
    let total = per_axis.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut point = vec![0.0; d];
        let mut rem = flat;
        for k in (0..d).rev() {
            point[k] = axes[k][rem % per_axis];
            rem /= per_axis;
        }
        out.push(point);
    }
    out
}

/// Chebyshev polynomial `T_n(t)` by recurrence.
pub fn chebyshev_t(n: usize, t: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => t,
        _ => {
            let mut prev = 1.0;
            let mut cur = t;
            for _ in 2..=n {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out` with `T_0(t), ..., T_max(t)`.
pub fn chebyshev_all(max_n: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if max_n == 0 {
        return;
    }
    out.push(t);
    for k in 2..=max_n {
        let next = 2.0 * t * out[k - 1] - out[k - 2];
        out.push(next);
    }
}
