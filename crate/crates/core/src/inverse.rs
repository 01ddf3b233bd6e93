//! Approximations of reciprocal polynomials on a cube and the quasi-Newton
//! inverse-filtering iteration they drive.
//!
//! Two approximation families are built for `1/h` on the spectral cube: the
//! degree-`M` partial sum of the Jacobi-series expansion, and the tensor
//! interpolation polynomial at rescaled Chebyshev points. Either one, applied
//! as a polynomial filter `G_M`, turns `x <- x - G_M (H x - y)` into an
//! exponentially convergent solver for `H x = y` whenever the sup-norm of
//! `1 - g_M h` over the cube (or just the spectral radius of `I - G_M H`)
//! is below one.

use std::time::Instant;

use crate::error::{CoreError, Result};
use crate::filter::{GraphOperator, MatvecCount, PolyFilter};
use crate::jacobi::{chebyshev_nodes_axis, gauss_jacobi, JacobiBasis};
use crate::poly::{Basis, MultiPoly};
use crate::signal::Signal;

/// Approximation family for the reciprocal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxFamily {
    /// Jacobi-series partial sum with parameters `alpha, beta > -1`.
    Jpa { alpha: f64, beta: f64 },
    /// Interpolation at rescaled Chebyshev points.
    Cipa,
}

impl ApproxFamily {
    pub fn label(&self) -> String {
        match self {
            ApproxFamily::Jpa { alpha, beta } => format!("jpa({alpha},{beta})"),
            ApproxFamily::Cipa => "cipa".into(),
        }
    }
}

/// Which solver to run for an inverse-filtering step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    Approx(ApproxFamily),
    /// Gradient descent with the optimal constant step size; needs a
    /// positive definite filter.
    Gd0,
}

/// Solver specification: family plus approximation degree (ignored by GD0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxSpec {
    pub kind: SolverKind,
    pub degree: usize,
}

impl ApproxSpec {
    pub fn jpa(alpha: f64, beta: f64, degree: usize) -> Self {
        Self { kind: SolverKind::Approx(ApproxFamily::Jpa { alpha, beta }), degree }
    }

    pub fn cipa(degree: usize) -> Self {
        Self { kind: SolverKind::Approx(ApproxFamily::Cipa), degree }
    }

    pub fn gd0() -> Self {
        Self { kind: SolverKind::Gd0, degree: 0 }
    }

    pub fn label(&self) -> String {
        match self.kind {
            SolverKind::Approx(f) => f.label(),
            SolverKind::Gd0 => "gd0".into(),
        }
    }

    /// Parses `jpa:<alpha>:<beta>:<M>`, `cipa:<M>` or `gd0`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').map(|p| p.trim()).collect();
        let bad = |msg: String| CoreError::InvalidParameter(msg);
        match parts.as_slice() {
            ["gd0"] => Ok(Self::gd0()),
            ["cipa", m] => {
                let m = m.parse().map_err(|_| bad(format!("invalid degree `{m}`")))?;
                Ok(Self::cipa(m))
            }
            ["jpa", a, b, m] => {
                let a: f64 = a.parse().map_err(|_| bad(format!("invalid alpha `{a}`")))?;
                let b: f64 = b.parse().map_err(|_| bad(format!("invalid beta `{b}`")))?;
                let m = m.parse().map_err(|_| bad(format!("invalid degree `{m}`")))?;
                Ok(Self::jpa(a, b, m))
            }
            _ => Err(bad(format!(
                "invalid solver spec `{text}` (expected jpa:<alpha>:<beta>:<M> | cipa:<M> | gd0)"
            ))),
        }
    }
}

/// Grid points per axis used for sup-norm scans and positivity certificates.
pub fn default_grid_density(dims: usize) -> usize {
    match dims {
        1 => 2001,
        2 => 201,
        _ => 51,
    }
}

/// Checks `h` is nonvanishing on a dense cube sample; returns min |h|.
pub fn nonvanishing_min(h: &MultiPoly, cube: &[(f64, f64)], density: usize) -> Result<f64> {
    let mut min_abs = f64::INFINITY;
    for_each_grid_point(cube, density, |t| {
        let v = h.evaluate(t).abs();
        if v < min_abs {
            min_abs = v;
        }
    });
    if min_abs <= 0.0 {
        return Err(CoreError::VanishingOnCube(min_abs));
    }
    Ok(min_abs)
}

/// Quadrature nodes per axis for the reciprocal's series coefficients.
/// The integrand is analytic, so a fixed 64-point rule is far inside the
/// target tolerance; a doubling check guards against surprises.
pub const COEFF_QUADRATURE_NODES: usize = 64;

/// Degree-`M` partial sum of the Jacobi-series expansion of `1/h` on the
/// cube, returned in the rescaled Jacobi basis. Coefficients come from
/// tensor Gauss-Jacobi quadrature; the rule is re-run with twice the nodes
/// and any coefficient moving more than `1e-8` relative is an error.
pub fn jacobi_coefficients(
    h: &MultiPoly,
    cube: &[(f64, f64)],
    alpha: f64,
    beta: f64,
    m_degree: usize,
) -> Result<MultiPoly> {
    let d = cube.len();
    if h.dims() != d {
        return Err(CoreError::DimensionMismatch { expected: d, got: h.dims() });
    }
    nonvanishing_min(h, cube, default_grid_density(d))?;
    let coarse =
        jacobi_coefficients_with_nodes(h, cube, alpha, beta, m_degree, COEFF_QUADRATURE_NODES)?;
    let fine =
        jacobi_coefficients_with_nodes(h, cube, alpha, beta, m_degree, 2 * COEFF_QUADRATURE_NODES)?;
    // relative to the coefficient scale, so exact zeros are not flagged on
    // rounding noise
    let scale = fine.iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1e-300);
    for (i, (a, b)) in coarse.iter().zip(fine.iter()).enumerate() {
        let rel = (a - b).abs() / b.abs().max(scale);
        if rel > 1e-8 {
            return Err(CoreError::QuadratureUnstable { index: i, rel_change: rel });
        }
    }
    MultiPoly::new(vec![m_degree; d], fine, Basis::Jacobi { alpha, beta, cube: cube.to_vec() })
}

fn jacobi_coefficients_with_nodes(
    h: &MultiPoly,
    cube: &[(f64, f64)],
    alpha: f64,
    beta: f64,
    m_degree: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    let d = cube.len();
    let basis = JacobiBasis::new(alpha, beta)?;
    let (s_nodes, s_weights) = gauss_jacobi(alpha, beta, nodes)?;

    // reciprocal values on the tensor node grid (row major, last axis fastest)
    let total = nodes.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    let mut point = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            let s = s_nodes[rem % nodes];
            let (mu, nu) = cube[k];
            point[k] = 0.5 * (mu + nu) + 0.5 * (nu - mu) * s;
            rem /= nodes;
        }
        values.push(1.0 / h.evaluate(&point));
    }

    // contract one axis at a time with  A[n][j] = P_n(s_j) w_j
    let mut transform = vec![vec![0.0; nodes]; m_degree + 1];
    let mut pvals = Vec::new();
    for (j, (&s, &w)) in s_nodes.iter().zip(s_weights.iter()).enumerate() {
        basis.eval_all(m_degree, s, &mut pvals);
        for (n, row) in transform.iter_mut().enumerate() {
            row[j] = pvals[n] * w;
        }
    }
    // each pass consumes the current last axis and prepends the transformed
    // index; after d passes the layout is row-major over (n_1, ..., n_d)
    let mut tensor = values;
    for _axis in 0..d {
        tensor = contract_last_axis(&tensor, nodes, m_degree + 1, &transform);
    }
    // normalize by the reference-interval norms; the cube volume cancels
    // against the change of variables
    let coeff_box = m_degree + 1;
    let mut out = tensor;
    for (flat, c) in out.iter_mut().enumerate() {
        let mut rem = flat;
        let mut gamma = 1.0;
        for _ in 0..d {
            gamma *= basis.gamma(rem % coeff_box);
            rem /= coeff_box;
        }
        *c /= gamma;
    }
    Ok(out)
}

/// Contracts the last axis (length `in_len`) of a row-major tensor against
/// `transform[n][j]`, producing a tensor whose FIRST axis is the new index.
/// Equivalently: out[n, rest] = sum_j in[rest, j] * transform[n][j].
fn contract_last_axis(
    tensor: &[f64],
    in_len: usize,
    out_len: usize,
    transform: &[Vec<f64>],
) -> Vec<f64> {
    let rest = tensor.len() / in_len;
    let mut out = vec![0.0; rest * out_len];
    for r in 0..rest {
        let row = &tensor[r * in_len..(r + 1) * in_len];
        for n in 0..out_len {
            let mut acc = 0.0;
            for (j, &v) in row.iter().enumerate() {
                acc += v * transform[n][j];
            }
            out[n * rest + r] = acc;
        }
    }
    out
}

/// Tensor Chebyshev interpolation of `1/h` at the `(M+1)^d` rescaled
/// Chebyshev points, in the rescaled Chebyshev basis. A cosine transform of
/// the nodal values gives the coefficients; interpolation is exact at the
/// nodes by discrete orthogonality.
pub fn cheb_interp(h: &MultiPoly, cube: &[(f64, f64)], m_degree: usize) -> Result<MultiPoly> {
    let d = cube.len();
    if h.dims() != d {
        return Err(CoreError::DimensionMismatch { expected: d, got: h.dims() });
    }
    let per_axis = m_degree + 1;
    let axes: Vec<Vec<f64>> = cube.iter().map(|&iv| chebyshev_nodes_axis(m_degree, iv)).collect();
    let total = per_axis.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    let mut point = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            point[k] = axes[k][rem % per_axis];
            rem /= per_axis;
        }
        let hv = h.evaluate(&point);
        if hv == 0.0 {
            return Err(CoreError::VanishingOnCube(0.0));
        }
        values.push(1.0 / hv);
    }
    // cosine transform per axis: C[k][j] = (2 - [k=0]) / (M+1) * cos(k (j-1/2) pi / (M+1))
    let mut transform = vec![vec![0.0; per_axis]; per_axis];
    for (k, row) in transform.iter_mut().enumerate() {
        let scale = if k == 0 { 1.0 } else { 2.0 } / per_axis as f64;
        for (j, v) in row.iter_mut().enumerate() {
            *v = scale
                * ((k as f64) * (j as f64 + 0.5) * std::f64::consts::PI / per_axis as f64).cos();
        }
    }
    let mut tensor = values;
    for _axis in 0..d {
        tensor = contract_last_axis(&tensor, per_axis, per_axis, &transform);
    }
    MultiPoly::new(vec![m_degree; d], tensor, Basis::Chebyshev { cube: cube.to_vec() })
}

/// Max over a uniform tensor grid of `|1 - g(t) h(t)|`.
pub fn sup_error(h: &MultiPoly, g: &MultiPoly, cube: &[(f64, f64)], density: usize) -> f64 {
    let mut worst = 0.0f64;
    for_each_grid_point(cube, density, |t| {
        let v = (1.0 - g.evaluate(t) * h.evaluate(t)).abs();
        if v > worst {
            worst = v;
        }
    });
    worst
}

fn for_each_grid_point(cube: &[(f64, f64)], density: usize, mut f: impl FnMut(&[f64])) {
    let d = cube.len();
    let total = density.pow(d as u32);
    let mut point = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            let i = rem % density;
            rem /= density;
            let (lo, hi) = cube[k];
            point[k] = if density == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (density - 1) as f64
            };
        }
        f(&point);
    }
}

/// Builds the approximation polynomial for `1/h` together with its measured
/// sup error `b_M` over the cube.
pub fn build_approximant(
    family: ApproxFamily,
    h: &MultiPoly,
    cube: &[(f64, f64)],
    m_degree: usize,
) -> Result<(MultiPoly, f64)> {
    let g = match family {
        ApproxFamily::Jpa { alpha, beta } => jacobi_coefficients(h, cube, alpha, beta, m_degree)?,
        ApproxFamily::Cipa => cheb_interp(h, cube, m_degree)?,
    };
    let b = sup_error(h, &g, cube, default_grid_density(cube.len()));
    Ok((g, b))
}

/// One row of the approximation-error table.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub family: ApproxFamily,
    pub degree: usize,
    pub sup_error: f64,
}

/// Batch sup-error table over families and degrees `0..=max_degree`.
pub fn error_curve(
    h: &MultiPoly,
    cube: &[(f64, f64)],
    families: &[ApproxFamily],
    max_degree: usize,
) -> Result<Vec<ErrorRow>> {
    let mut rows = Vec::new();
    for &family in families {
        for m in 0..=max_degree {
            let (_, b) = build_approximant(family, h, cube, m)?;
            rows.push(ErrorRow { family, degree: m, sup_error: b });
        }
    }
    Ok(rows)
}

/// How an iterative solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

/// Per-iteration record of an inverse-filtering run. Index `m` of every
/// vector refers to the iterate `x^{(m)}` (index 0 is the initial guess).
#[derive(Debug, Clone)]
pub struct IterTrace {
    /// `||H x^{(m)} - y|| / ||y||`.
    pub residuals: Vec<f64>,
    /// `||x^{(m)} - x|| / ||x||` when the truth is known.
    pub rel_errors: Option<Vec<f64>>,
    /// Cumulative sparse matvec count up to and including iterate `m`.
    pub matvecs: Vec<MatvecCount>,
    pub wall: std::time::Duration,
    pub status: SolveStatus,
    /// Set when the contraction hypothesis `b_M < 1` could not be certified.
    pub warning: Option<String>,
}

impl IterTrace {
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    /// Writes the `m,residual,rel_error,matvecs` CSV (header mandatory).
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        writeln!(w, "m,residual,rel_error,matvecs")?;
        for m in 0..self.residuals.len() {
            let rel = self
                .rel_errors
                .as_ref()
                .map(|e| format!("{:.12e}", e[m]))
                .unwrap_or_default();
            writeln!(w, "{m},{:.12e},{rel},{}", self.residuals[m], self.matvecs[m])?;
        }
        Ok(())
    }
}

/// A solve that failed mid-iteration, with the partial trace attached.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: CoreError,
    pub trace: IterTrace,
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} iterations", self.error, self.trace.iterations())
    }
}

impl std::error::Error for SolveFailure {}

impl From<SolveFailure> for CoreError {
    fn from(f: SolveFailure) -> Self {
        f.error
    }
}

/// Options for the iterative solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub rtol: f64,
    pub initial: Option<Signal>,
    /// Residual growth factor over its running minimum that aborts the run.
    pub divergence_factor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 100, rtol: 1e-10, initial: None, divergence_factor: 1e6 }
    }
}

impl SolveOptions {
    pub fn with_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }
}

/// Quasi-Newton inverse filtering: `e = H x - y; x <- x - G e`, zero initial
/// by default. `g_approx` is usually a [`PolyFilter`] for the reciprocal
/// approximant, but any operator (e.g. a dense inverse oracle) works.
pub fn quasi_newton_solve(
    h: &PolyFilter,
    g_approx: &dyn GraphOperator,
    y: &Signal,
    truth: Option<&Signal>,
    opts: &SolveOptions,
) -> std::result::Result<(Signal, IterTrace), SolveFailure> {
    run_iteration(h, Some(g_approx), None, y, truth, opts, None)
}

/// Same iteration with a warning recorded when the certified contraction
/// bound is at or above one (the spectral radius may still be below one,
/// so the run proceeds).
pub fn quasi_newton_solve_checked(
    h: &PolyFilter,
    g_approx: &dyn GraphOperator,
    sup_err: f64,
    y: &Signal,
    truth: Option<&Signal>,
    opts: &SolveOptions,
) -> std::result::Result<(Signal, IterTrace), SolveFailure> {
    let warning = (sup_err >= 1.0).then(|| {
        format!("sup-norm bound {sup_err:.4} >= 1; convergence not certified by the cube bound")
    });
    run_iteration(h, Some(g_approx), None, y, truth, opts, warning)
}

/// Gradient descent with the optimal constant step `2 / (lmin + lmax)`.
/// Requires `H` positive definite over its joint spectrum.
pub fn gd0_solve(
    h: &PolyFilter,
    y: &Signal,
    truth: Option<&Signal>,
    opts: &SolveOptions,
) -> std::result::Result<(Signal, IterTrace), SolveFailure> {
    let (lmin, lmax) = h.spectral_range().map_err(|e| SolveFailure {
        error: e,
        trace: empty_trace(),
    })?;
    if lmin <= 0.0 {
        return Err(SolveFailure {
            error: CoreError::InvalidParameter(format!(
                "GD0 needs a positive definite filter (min spectrum value {lmin:.3e})"
            )),
            trace: empty_trace(),
        });
    }
    let step = 2.0 / (lmin + lmax);
    run_iteration(h, None, Some(step), y, truth, opts, None)
}

fn empty_trace() -> IterTrace {
    IterTrace {
        residuals: vec![],
        rel_errors: None,
        matvecs: vec![],
        wall: std::time::Duration::ZERO,
        status: SolveStatus::MaxIterations,
        warning: None,
    }
}

fn run_iteration(
    h: &PolyFilter,
    g_approx: Option<&dyn GraphOperator>,
    gd_step: Option<f64>,
    y: &Signal,
    truth: Option<&Signal>,
    opts: &SolveOptions,
    warning: Option<String>,
) -> std::result::Result<(Signal, IterTrace), SolveFailure> {
    let started = Instant::now();
    let n = h.dim();
    let y_norm = y.norm();
    let truth_norm = truth.map(|t| t.norm());
    let mut mv: MatvecCount = 0;

    let mut x: Vec<f64> = match &opts.initial {
        Some(x0) => x0.values().to_vec(),
        None => vec![0.0; n],
    };

    let mut trace = IterTrace {
        residuals: Vec::with_capacity(opts.max_iters + 1),
        rel_errors: truth.map(|_| Vec::with_capacity(opts.max_iters + 1)),
        matvecs: Vec::with_capacity(opts.max_iters + 1),
        wall: std::time::Duration::ZERO,
        status: SolveStatus::MaxIterations,
        warning,
    };

    let record = |trace: &mut IterTrace, x: &[f64], e: &[f64], mv: MatvecCount| {
        let res = norm(e) / if y_norm > 0.0 { y_norm } else { 1.0 };
        trace.residuals.push(res);
        trace.matvecs.push(mv);
        if let (Some(errors), Some(t), Some(tn)) = (trace.rel_errors.as_mut(), truth, truth_norm) {
            let mut acc = 0.0;
            for (a, b) in x.iter().zip(t.values()) {
                acc += (a - b) * (a - b);
            }
            errors.push(acc.sqrt() / if tn > 0.0 { tn } else { 1.0 });
        }
        res
    };

    // e = H x - y
    let mut e = h.apply_slice(&x, &mut mv);
    sub_assign(&mut e, y.values());
    let mut res = record(&mut trace, &x, &e, mv);
    let mut best = res;

    for m in 1..=opts.max_iters {
        if res <= opts.rtol {
            trace.status = SolveStatus::Converged;
            break;
        }
        // x <- x - G e (or - step * e)
        match (g_approx, gd_step) {
            (Some(g), _) => {
                let ge = g.apply_op(&e, &mut mv);
                for (xi, gi) in x.iter_mut().zip(ge.iter()) {
                    *xi -= gi;
                }
            }
            (None, Some(step)) => {
                for (xi, ei) in x.iter_mut().zip(e.iter()) {
                    *xi -= step * ei;
                }
            }
            _ => unreachable!("one update rule is always present"),
        }
        e = h.apply_slice(&x, &mut mv);
        sub_assign(&mut e, y.values());
        res = record(&mut trace, &x, &e, mv);

        if !res.is_finite() {
            trace.wall = started.elapsed();
            return Err(SolveFailure { error: CoreError::NonFinite(m), trace });
        }
        best = best.min(res);
        if res > best * opts.divergence_factor {
            trace.wall = started.elapsed();
            return Err(SolveFailure {
                error: CoreError::Diverged { step: m, residual: res },
                trace,
            });
        }
        if res <= opts.rtol {
            trace.status = SolveStatus::Converged;
            break;
        }
    }
    if res <= opts.rtol {
        trace.status = SolveStatus::Converged;
    }
    trace.wall = started.elapsed();
    let sig = Signal::new(y.graph().clone(), x).expect("dimensions line up");
    Ok((sig, trace))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn sub_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x -= y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::graph::build_circulant;
    use crate::poly::bench_poly_h1;
    use crate::shift::Shift;
    use std::sync::Arc;

    const CUBE: [(f64, f64); 1] = [(0.0, 2.0)];

    #[test]
    fn constant_reciprocal_is_exact_at_degree_zero() {
        let h = MultiPoly::constant(1, 2.0);
        let g = jacobi_coefficients(&h, &CUBE, 0.3, -0.3, 3).unwrap();
        assert!((g.coeffs()[0] - 0.5).abs() < 1e-12);
        for c in &g.coeffs()[1..] {
            assert!(c.abs() < 1e-12);
        }
        let c = cheb_interp(&h, &CUBE, 4).unwrap();
        assert!((c.coeffs()[0] - 0.5).abs() < 1e-13);
        for v in &c.coeffs()[1..] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn table_values_chebyshev_weight_degree_zero() {
        let h1 = bench_poly_h1();
        let (_, b0) = build_approximant(ApproxFamily::Jpa { alpha: -0.5, beta: -0.5 }, &h1, &CUBE, 0).unwrap();
        assert!((b0 - 1.0463).abs() < 1e-3, "b0 = {b0}");
        let (_, b1) = build_approximant(ApproxFamily::Jpa { alpha: -0.5, beta: -0.5 }, &h1, &CUBE, 1).unwrap();
        assert!((b1 - 0.5837).abs() < 1e-3, "b1 = {b1}");
    }

    #[test]
    fn table_values_mixed_weights() {
        let h1 = bench_poly_h1();
        let (_, b4) = build_approximant(ApproxFamily::Jpa { alpha: 0.0, beta: -0.5 }, &h1, &CUBE, 4).unwrap();
        assert!((b4 - 0.0850).abs() < 1e-3, "b4 = {b4}");
        let (_, b2) = build_approximant(ApproxFamily::Jpa { alpha: 0.5, beta: -0.5 }, &h1, &CUBE, 2).unwrap();
        assert!((b2 - 0.3563).abs() < 1e-3, "b2 = {b2}");
    }

    #[test]
    fn chebyshev_interpolation_degree_zero_closed_form() {
        let h1 = bench_poly_h1();
        let c0 = cheb_interp(&h1, &CUBE, 0).unwrap();
        // single node at t = 1: constant 1/h1(1) = 0.2
        assert!((c0.coeffs()[0] - 0.2).abs() < 1e-14);
        let b = sup_error(&h1, &c0, &CUBE, 2001);
        assert!((b - 0.75).abs() < 1e-3, "b = {b}");
    }

    #[test]
    fn chebyshev_interpolation_degree_four() {
        let h1 = bench_poly_h1();
        let c4 = cheb_interp(&h1, &CUBE, 4).unwrap();
        let b = sup_error(&h1, &c4, &CUBE, 2001);
        assert!((b - 0.0595).abs() < 1e-3, "b = {b}");
        // interpolation property: exact at the rescaled Chebyshev nodes
        for t in chebyshev_nodes_axis(4, CUBE[0]) {
            let diff = c4.eval1(t) - 1.0 / h1.eval1(t);
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn sup_error_of_exact_reciprocal_is_zero() {
        let h = MultiPoly::constant(1, 4.0);
        let g = MultiPoly::constant(1, 0.25);
        assert_eq!(sup_error(&h, &g, &CUBE, 101), 0.0);
    }

    #[test]
    fn error_curve_decays_for_h1() {
        let h1 = bench_poly_h1();
        let fams = [
            ApproxFamily::Jpa { alpha: -0.5, beta: 0.5 },
            ApproxFamily::Jpa { alpha: 1.0, beta: 1.0 },
            ApproxFamily::Cipa,
        ];
        let rows = error_curve(&h1, &CUBE, &fams, 4).unwrap();
        // spec'd spot values
        let find = |f: ApproxFamily, m: usize| {
            rows.iter().find(|r| r.family == f && r.degree == m).unwrap().sup_error
        };
        let expect_half = [1.8612, 1.8855, 1.3522, 0.8937, 0.5534];
        let expect_ones = [0.7140, 0.5626, 0.3927, 0.2686, 0.1720];
        for m in 0..=4 {
            assert!((find(fams[0], m) - expect_half[m]).abs() < 2e-3);
            assert!((find(fams[1], m) - expect_ones[m]).abs() < 2e-3);
        }
        // non-monotone at small degree for (-1/2, 1/2), but b_4 < b_0 throughout
        assert!(find(fams[0], 1) > find(fams[0], 0));
        for f in fams {
            assert!(find(f, 4) < find(f, 0));
        }
    }

    #[test]
    fn vanishing_polynomial_rejected() {
        let h = MultiPoly::univariate(vec![-1.0, 1.0]); // root at t = 1 inside [0,2]
        assert!(jacobi_coefficients(&h, &CUBE, 0.0, 0.0, 2).is_err());
    }

    struct DenseInverseOracle {
        inv: DenseMatrix,
    }

    impl GraphOperator for DenseInverseOracle {
        fn op_dim(&self) -> usize {
            self.inv.rows
        }
        fn apply_op(&self, x: &[f64], _mv: &mut MatvecCount) -> Vec<f64> {
            self.inv.matvec(x)
        }
    }

    fn h1_filter(n: usize) -> (Arc<crate::graph::Graph>, PolyFilter) {
        let g = Arc::new(build_circulant(n, &[1, 2, 5]).unwrap());
        let l = Arc::new(Shift::normalized_laplacian(g.clone()).unwrap());
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        (g, f)
    }

    #[test]
    fn exact_inverse_oracle_converges_in_one_step() {
        let (g, h) = h1_filter(16);
        let dense = h.materialize().unwrap();
        let oracle = DenseInverseOracle { inv: dense.inverse().unwrap() };
        let truth = Signal::new(g.clone(), (0..16).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let y = h.apply(&truth).unwrap();
        let (x, trace) =
            quasi_newton_solve(&h, &oracle, &y, Some(&truth), &SolveOptions::default()).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        assert!(trace.iterations() <= 2);
        for (a, b) in x.values().iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobi_solver_matches_dense_solve() {
        let (g, h) = h1_filter(24);
        let cube = h.spectral().unwrap().cube().to_vec();
        let (gm, b) = build_approximant(ApproxFamily::Jpa { alpha: 0.0, beta: -0.5 }, h.poly(), &cube, 2).unwrap();
        assert!(b < 1.0);
        let gm_filter = h.with_poly(gm).unwrap();
        let truth = Signal::new(g.clone(), (0..24).map(|i| ((i * i) as f64).cos()).collect()).unwrap();
        let y = h.apply(&truth).unwrap();
        let opts = SolveOptions::default().with_rtol(1e-12).with_iters(300);
        let (x, trace) =
            quasi_newton_solve_checked(&h, &gm_filter, b, &y, Some(&truth), &opts).unwrap();
        assert_eq!(trace.status, SolveStatus::Converged);
        assert!(trace.warning.is_none());
        let dense = h.materialize().unwrap();
        let oracle = dense.solve(y.values()).unwrap();
        for (a, b) in x.values().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gd0_identity_converges_in_one_step() {
        let g = Arc::new(build_circulant(8, &[1]).unwrap());
        let id = Arc::new(Shift::identity(g.clone()));
        let h = PolyFilter::new(vec![id], MultiPoly::univariate(vec![0.0, 1.0])).unwrap();
        let truth = Signal::new(g, (0..8).map(|i| i as f64).collect()).unwrap();
        let y = h.apply(&truth).unwrap();
        let (x, trace) = gd0_solve(&h, &y, Some(&truth), &SolveOptions::default()).unwrap();
        assert!(trace.iterations() <= 1);
        for (a, b) in x.values().iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gd0_rejects_indefinite_filter() {
        let g = Arc::new(build_circulant(8, &[1]).unwrap());
        let l = Arc::new(Shift::normalized_laplacian(g.clone()).unwrap());
        // spectrum of L^sym includes 0, so h(t) = t - 1 changes sign
        let h = PolyFilter::new(vec![l], MultiPoly::univariate(vec![-1.0, 1.0])).unwrap();
        let y = Signal::constant(g, 1.0);
        assert!(gd0_solve(&h, &y, None, &SolveOptions::default()).is_err());
    }

    #[test]
    fn gd0_contraction_in_energy_norm() {
        let (g, h) = h1_filter(12);
        let dense = h.materialize().unwrap();
        let (lmin, lmax) = h.spectral_range().unwrap();
        let rho = (lmax - lmin) / (lmax + lmin);
        let truth = Signal::new(g.clone(), (0..12).map(|i| (i as f64).sin()).collect()).unwrap();
        let y = h.apply(&truth).unwrap();
        // dense-oracle iteration tracking the energy norm of the error
        let step = 2.0 / (lmin + lmax);
        let mut x = vec![0.0; 12];
        let energy = |v: &[f64]| -> f64 {
            let hv = dense.matvec(v);
            v.iter().zip(hv.iter()).map(|(a, b)| a * b).sum::<f64>().sqrt()
        };
        let mut prev = {
            let diff: Vec<f64> = x.iter().zip(truth.values()).map(|(a, b)| a - b).collect();
            energy(&diff)
        };
        for _ in 0..20 {
            let hx = dense.matvec(&x);
            for i in 0..12 {
                x[i] -= step * (hx[i] - y.values()[i]);
            }
            let diff: Vec<f64> = x.iter().zip(truth.values()).map(|(a, b)| a - b).collect();
            let cur = energy(&diff);
            assert!(cur <= rho * prev + 1e-13, "A-norm contraction violated: {cur} vs {prev}");
            prev = cur;
        }
    }

    #[test]
    fn divergence_guard_trips() {
        let (g, h) = h1_filter(12);
        // G = -3 * I makes I - GH wildly expanding
        let bad = h.with_poly(MultiPoly::constant(1, -3.0)).unwrap();
        let y = Signal::constant(g, 1.0);
        let err = quasi_newton_solve(&h, &bad, &y, None, &SolveOptions::default()).unwrap_err();
        assert!(err.trace.iterations() > 0);
        match err.error {
            CoreError::Diverged { .. } | CoreError::NonFinite(_) => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn solver_spec_parsing() {
        assert_eq!(ApproxSpec::parse("gd0").unwrap(), ApproxSpec::gd0());
        assert_eq!(ApproxSpec::parse("cipa:3").unwrap(), ApproxSpec::cipa(3));
        assert_eq!(
            ApproxSpec::parse("jpa:0.5:-0.5:2").unwrap(),
            ApproxSpec::jpa(0.5, -0.5, 2)
        );
        assert!(ApproxSpec::parse("nope").is_err());
        assert!(ApproxSpec::parse("jpa:1:2").is_err());
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let (g, h) = h1_filter(16);
        let cube = h.spectral().unwrap().cube().to_vec();
        let (gm, _) = build_approximant(ApproxFamily::Cipa, h.poly(), &cube, 1).unwrap();
        let gm_filter = h.with_poly(gm).unwrap();
        let truth = Signal::constant(g, 1.0);
        let y = h.apply(&truth).unwrap();
        let (_, trace) =
            quasi_newton_solve(&h, &gm_filter, &y, Some(&truth), &SolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "m,residual,rel_error,matvecs");
        assert!(lines.next().unwrap().starts_with("0,"));
    }
}
