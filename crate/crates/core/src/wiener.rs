//! Wiener-type reconstruction filters for polynomial filtering problems on
//! commuting symmetric shifts.
//!
//! The stochastic filter `(P+K)^{-1} P R H^T (H R H^T + G)^{-1}`, its
//! wide-band variant (correlation replaced by the centered covariance), the
//! worst-case filter `d0^2 H^T (d0^2 H H^T + G)^{-1}` and the Tikhonov
//! baseline `(P+K)^{-1} P` are all realized as two-step pipelines: a
//! quasi-Newton inverse filtering step for the polynomial part, then local
//! rescalings with a Neumann iteration for the probability-weighted
//! regularizer. Dense closed forms of everything exist behind a size limit
//! as test oracles and for the error functionals.

use crate::dense::{sym_lambda_max, DenseMatrix};
use crate::error::{CoreError, Result};
use crate::filter::{MatvecCount, PolyFilter};
use crate::inverse::{
    build_approximant, default_grid_density, gd0_solve, quasi_newton_solve_checked, ApproxSpec,
    IterTrace, SolveOptions, SolverKind,
};
use crate::poly::{Basis, MultiPoly};
use crate::signal::Signal;

/// Probability measure on the vertices.
#[derive(Debug, Clone)]
pub enum Probability {
    Uniform,
    Weights(Vec<f64>),
}

/// A reconstruction problem: filter `h`, signal correlation `r` (the
/// centered covariance for wide-band inputs), noise covariance `g`,
/// regularizer `k`, vertex probabilities and an optional energy bound for
/// the worst-case filter. All polynomials are over the same shifts as `h`.
#[derive(Debug, Clone)]
pub struct WienerProblem {
    h: PolyFilter,
    r: MultiPoly,
    g: MultiPoly,
    k: MultiPoly,
    p: Vec<f64>,
    delta0: Option<f64>,
    cube: Vec<(f64, f64)>,
}

/// Reconstruction output with the solver telemetry.
#[derive(Debug, Clone)]
pub struct WienerResult {
    pub signal: Signal,
    pub inverse_trace: IterTrace,
    pub neumann_iterations: usize,
    /// Geometric rate `K / (K + p_min)` of the Neumann step (0 when skipped).
    pub neumann_rate: f64,
    pub matvecs: MatvecCount,
}

impl WienerProblem {
    pub fn new(
        h: PolyFilter,
        r: MultiPoly,
        g: MultiPoly,
        k: MultiPoly,
        p: Probability,
        delta0: Option<f64>,
    ) -> Result<Self> {
        let dims = h.poly().dims();
        for (name, poly) in [("r", &r), ("g", &g), ("k", &k)] {
            if poly.dims() != dims {
                return Err(CoreError::DimensionMismatch { expected: dims, got: poly.dims() });
            }
            if poly.basis() != &Basis::Monomial {
                return Err(CoreError::InvalidParameter(format!(
                    "problem polynomial `{name}` must be in the monomial basis"
                )));
            }
        }
        if h.poly().basis() != &Basis::Monomial {
            return Err(CoreError::InvalidParameter(
                "filter polynomial must be in the monomial basis".into(),
            ));
        }
        let n = h.dim();
        let p = match p {
            Probability::Uniform => vec![1.0 / n as f64; n],
            Probability::Weights(mut w) => {
                if w.len() != n {
                    return Err(CoreError::DimensionMismatch { expected: n, got: w.len() });
                }
                let sum: f64 = w.iter().sum();
                if !(sum.is_finite() && (sum - 1.0).abs() < 1e-8) {
                    return Err(CoreError::InvalidParameter(format!(
                        "probabilities must sum to 1 (got {sum})"
                    )));
                }
                for v in &w {
                    if !(*v > 0.0) {
                        return Err(CoreError::InvalidParameter(
                            "probabilities must be strictly positive".into(),
                        ));
                    }
                }
                for v in &mut w {
                    *v /= sum;
                }
                w
            }
        };
        if let Some(d) = delta0 {
            if !(d > 0.0) {
                return Err(CoreError::InvalidParameter("energy bound must be positive".into()));
            }
        }
        let cube = h.spectral()?.cube().to_vec();
        Ok(Self { h, r, g, k, p, delta0, cube })
    }

    pub fn filter(&self) -> &PolyFilter {
        &self.h
    }

    pub fn correlation(&self) -> &MultiPoly {
        &self.r
    }

    pub fn noise_poly(&self) -> &MultiPoly {
        &self.g
    }

    pub fn regularizer(&self) -> &MultiPoly {
        &self.k
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn delta0(&self) -> Option<f64> {
        self.delta0
    }

    pub fn cube(&self) -> &[(f64, f64)] {
        &self.cube
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    fn grid_density(&self) -> usize {
        default_grid_density(self.cube.len())
    }

    fn grid_min(&self, poly: &MultiPoly) -> f64 {
        let mut min = f64::INFINITY;
        let density = self.grid_density();
        for_each_grid_point(&self.cube, density, |t| {
            let v = poly.evaluate(t);
            if v < min {
                min = v;
            }
        });
        min
    }

    fn grid_max(&self, poly: &MultiPoly) -> f64 {
        -self.grid_min(&poly.scale(-1.0))
    }

    fn require_positive(&self, what: &str, poly: &MultiPoly) -> Result<()> {
        let min = self.grid_min(poly);
        if !(min > 0.0) {
            return Err(CoreError::PositivityFailure { what: what.into(), min });
        }
        Ok(())
    }

    /// `h^2 r + g`, the polynomial inverted by the stochastic pipeline.
    pub fn stochastic_inverse_target(&self) -> Result<MultiPoly> {
        let h2 = self.h.poly().multiply(self.h.poly())?;
        h2.multiply(&self.r)?.add(&self.g)
    }

    /// `d0^2 h^2 + g`, the polynomial inverted by the worst-case pipeline.
    pub fn worstcase_inverse_target(&self) -> Result<MultiPoly> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case filtering needs an energy bound".into())
        })?;
        let h2 = self.h.poly().multiply(self.h.poly())?;
        h2.scale(d0 * d0).add(&self.g)
    }

    /// Precomputes the inverse-step machinery for a solver so repeated
    /// applications (trial loops) skip quadrature and grid scans.
    pub fn prepare(&self, solver: &ApproxSpec) -> Result<PreparedSolver> {
        let target = self.stochastic_inverse_target()?;
        self.require_positive("h^2 r + g", &target)?;
        let stochastic = self.prepare_target(&target, solver)?;
        let worstcase = match self.delta0 {
            Some(_) => {
                let wc_target = self.worstcase_inverse_target()?;
                self.require_positive("d0^2 h^2 + g", &wc_target)?;
                Some(self.prepare_target(&wc_target, solver)?)
            }
            None => None,
        };
        let hr = self.h.with_poly(self.h.poly().multiply(&self.r)?)?;
        let (k_sup, p_min) = self.neumann_parameters()?;
        Ok(PreparedSolver { stochastic, worstcase, hr, k_sup, p_min })
    }

    fn prepare_target(&self, target: &MultiPoly, solver: &ApproxSpec) -> Result<PreparedInverse> {
        let filter = self.h.with_poly(target.clone())?;
        let approx = match solver.kind {
            SolverKind::Gd0 => None,
            SolverKind::Approx(family) => {
                let (gm, b) = build_approximant(family, target, &self.cube, solver.degree)?;
                Some((filter.with_poly(gm)?, b))
            }
        };
        Ok(PreparedInverse { filter, approx })
    }

    /// Wiener filtering without regularization:
    /// `w = (hr)(S) (h^2 r + g)(S)^{-1} y`.
    pub fn wiener0_apply(
        &self,
        y: &Signal,
        solver: &ApproxSpec,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        self.prepare(solver)?.wiener0(self, y, opts)
    }

    /// Scalar bound `K = sup k` over the cube grid and the Neumann rate data.
    fn neumann_parameters(&self) -> Result<(f64, f64)> {
        let k_min = self.grid_min(&self.k);
        if k_min < -1e-12 {
            return Err(CoreError::PositivityFailure { what: "regularizer k".into(), min: k_min });
        }
        let k_sup = self.grid_max(&self.k).max(0.0);
        let p_min = self.p.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok((k_sup, p_min))
    }

    /// Neumann iteration for `z3 = (I + P^{-1/2} K P^{-1/2})^{-1} z2`.
    /// Runs the fixed iteration count implied by the geometric rate and
    /// `rtol`, capped at `m_max`. Returns the result, the iteration count
    /// and the matvecs spent.
    pub fn neumann_regularize(
        &self,
        z2: &Signal,
        m_max: usize,
        rtol: f64,
    ) -> Result<(Signal, usize, MatvecCount)> {
        let (k_sup, p_min) = self.neumann_parameters()?;
        if k_sup == 0.0 {
            return Ok((z2.clone(), 0, 0));
        }
        let rate = k_sup / (k_sup + p_min);
        let m_star = ((rtol.ln() / rate.ln()).ceil().max(0.0) as usize).min(m_max);
        let c_init = p_min / (k_sup + p_min);
        let c_keep = k_sup / (k_sup + p_min);
        let kf = self.h.with_poly(self.k.clone())?;
        let inv_sqrt_p: Vec<f64> = self.p.iter().map(|p| 1.0 / p.sqrt()).collect();
        let mut w = z2.values().to_vec();
        let mut mv: MatvecCount = 0;
        for _ in 0..m_star {
            let scaled: Vec<f64> = w.iter().zip(&inv_sqrt_p).map(|(v, s)| v * s).collect();
            let mut kw = kf.apply_slice(&scaled, &mut mv);
            for (v, s) in kw.iter_mut().zip(&inv_sqrt_p) {
                *v *= s;
            }
            for i in 0..w.len() {
                w[i] = c_init * z2.values()[i] + c_keep * w[i] - c_init * kw[i];
            }
        }
        Ok((Signal::new(z2.graph().clone(), w)?, m_star, mv))
    }

    /// Full stochastic Wiener filtering `x = (P+K)^{-1} P w`:
    /// the unregularized step, then rescale / Neumann / rescale.
    pub fn wiener_mse_apply(
        &self,
        y: &Signal,
        solver: &ApproxSpec,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        self.prepare(solver)?.wiener_mse(self, y, opts)
    }

    /// Norms of the wide-band invariants `(||K 1||, ||G 1||, ||H 1 - tau 1||, tau)`.
    pub fn wideband_invariants(&self) -> Result<(f64, f64, f64, f64)> {
        let n = self.dim();
        let ones = vec![1.0; n];
        let mut mv = 0;
        let k1 = self.h.with_poly(self.k.clone())?.apply_slice(&ones, &mut mv);
        let g1 = self.h.with_poly(self.g.clone())?.apply_slice(&ones, &mut mv);
        let h1 = self.h.apply_slice(&ones, &mut mv);
        let tau = h1.iter().sum::<f64>() / n as f64;
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let h_resid: Vec<f64> = h1.iter().map(|v| v - tau).collect();
        Ok((norm(&k1), norm(&g1), norm(&h_resid), tau))
    }

    /// Optimal unbiased reconstruction of wide-band stationary inputs: the
    /// stochastic pipeline run with the centered covariance, allowed only
    /// when `K 1 = G 1 = 0` and `H 1 = tau 1` with `tau != 0`.
    pub fn wideband_wiener_apply(
        &self,
        y: &Signal,
        solver: &ApproxSpec,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        let tol = 1e-8 * (self.dim() as f64).sqrt();
        let (k1, g1, h_resid, tau) = self.wideband_invariants()?;
        if k1 > tol {
            return Err(CoreError::WideBandInvariant { what: "K 1".into(), norm: k1 });
        }
        if g1 > tol {
            return Err(CoreError::WideBandInvariant { what: "G 1".into(), norm: g1 });
        }
        if h_resid > tol {
            return Err(CoreError::WideBandInvariant { what: "H 1 - tau 1".into(), norm: h_resid });
        }
        if tau.abs() <= tol {
            return Err(CoreError::WideBandInvariant { what: "tau".into(), norm: tau.abs() });
        }
        self.wiener_mse_apply(y, solver, opts)
    }

    /// Worst-case Wiener filtering:
    /// `x = d0^2 H (d0^2 H^2 + G)^{-1} y` for symmetric shifts.
    pub fn worstcase_wiener_apply(
        &self,
        y: &Signal,
        solver: &ApproxSpec,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        self.prepare(solver)?.worstcase(self, y, opts)
    }

    /// Tikhonov baseline `x = (P+K)^{-1} P y` through the same rescale /
    /// Neumann / rescale machinery.
    pub fn tikhonov_apply(
        &self,
        y: &Signal,
        m_max: usize,
        rtol: f64,
    ) -> Result<(Signal, usize, MatvecCount)> {
        if self.k.is_zero() {
            return Ok((y.clone(), 0, 0));
        }
        let sqrt_p: Vec<f64> = self.p.iter().map(|p| p.sqrt()).collect();
        let z2_vals: Vec<f64> = y.values().iter().zip(&sqrt_p).map(|(v, s)| v * s).collect();
        let z2 = Signal::new(y.graph().clone(), z2_vals)?;
        let (z3, iters, mv) = self.neumann_regularize(&z2, m_max, rtol)?;
        let x_vals: Vec<f64> = z3.values().iter().zip(&sqrt_p).map(|(v, s)| v / s).collect();
        Ok((Signal::new(y.graph().clone(), x_vals)?, iters, mv))
    }

    // ---- dense closed forms (oracles and error functionals) ----

    pub fn h_dense(&self) -> Result<DenseMatrix> {
        self.h.materialize()
    }

    pub fn r_dense(&self) -> Result<DenseMatrix> {
        self.h.with_poly(self.r.clone())?.materialize()
    }

    pub fn g_dense(&self) -> Result<DenseMatrix> {
        self.h.with_poly(self.g.clone())?.materialize()
    }

    pub fn k_dense(&self) -> Result<DenseMatrix> {
        self.h.with_poly(self.k.clone())?.materialize()
    }

    fn p_plus_k_dense(&self) -> Result<DenseMatrix> {
        let mut pk = self.k_dense()?;
        for (i, p) in self.p.iter().enumerate() {
            let v = pk.get(i, i) + p;
            pk.set(i, i, v);
        }
        Ok(pk)
    }

    /// `H R H^T + G`.
    pub fn q_dense(&self) -> Result<DenseMatrix> {
        self.h.with_poly(self.stochastic_inverse_target()?)?.materialize()
    }

    /// Stochastic Wiener filter `(P+K)^{-1} P R H^T (H R H^T + G)^{-1}`.
    pub fn w_mse_dense(&self) -> Result<DenseMatrix> {
        let rh = self.h.with_poly(self.h.poly().multiply(&self.r)?)?.materialize()?;
        let q_inv = self.q_dense()?.inverse()?;
        let pk_inv = self.p_plus_k_dense()?.inverse()?;
        let mut p_rh = rh;
        row_scale(&mut p_rh, &self.p);
        Ok(pk_inv.matmul(&p_rh).matmul(&q_inv))
    }

    /// Unregularized stochastic Wiener filter `R H^T (H R H^T + G)^{-1}`.
    pub fn w_mse0_dense(&self) -> Result<DenseMatrix> {
        let rh = self.h.with_poly(self.h.poly().multiply(&self.r)?)?.materialize()?;
        let q_inv = self.q_dense()?.inverse()?;
        Ok(rh.matmul(&q_inv))
    }

    /// Worst-case Wiener filter `d0^2 H (d0^2 H^2 + G)^{-1}`.
    pub fn w_wmse_dense(&self) -> Result<DenseMatrix> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case filtering needs an energy bound".into())
        })?;
        let inv = self.h.with_poly(self.worstcase_inverse_target()?)?.materialize()?.inverse()?;
        Ok(self.h_dense()?.matmul(&inv).scale(d0 * d0))
    }

    /// Tikhonov reconstruction matrix `(P+K)^{-1} P`.
    pub fn tikhonov_dense(&self) -> Result<DenseMatrix> {
        let mut p_mat = DenseMatrix::identity(self.dim());
        row_scale(&mut p_mat, &self.p);
        Ok(self.p_plus_k_dense()?.inverse()?.matmul(&p_mat))
    }

    /// Stochastic mean squared error functional
    /// `tr(W^T (P+K) W Q) + tr(P R) - tr(H R P W) - tr(W^T P R H^T)`.
    pub fn f_mse_eval(&self, w: &DenseMatrix) -> Result<f64> {
        let q = self.q_dense()?;
        let r = self.r_dense()?;
        let rh = self.h.with_poly(self.h.poly().multiply(&self.r)?)?.materialize()?;
        let pk = self.p_plus_k_dense()?;
        let wqwt = w.matmul(&q).matmul(&w.transpose());
        let term1 = trace_prod(&pk, &wqwt);
        let term2: f64 = (0..self.dim()).map(|i| self.p[i] * r.get(i, i)).sum();
        // tr(H R P W): scale columns of W by p via row-scaled transpose
        let mut pw = w.clone();
        row_scale(&mut pw, &self.p);
        let term3 = trace_prod(&rh, &pw);
        // tr(W^T P R H^T) = sum_ij W[i][j] * (P R H^T)[i][j]
        let mut prh = rh.clone();
        row_scale(&mut prh, &self.p);
        let term4: f64 = w.data.iter().zip(prh.data.iter()).map(|(a, b)| a * b).sum();
        Ok(term1 + term2 - term3 - term4)
    }

    /// Minimum of the stochastic functional: `tr(P (I - W_mse H) R)`.
    pub fn f_mse_min(&self) -> Result<f64> {
        let w = self.w_mse_dense()?;
        let h = self.h_dense()?;
        let r = self.r_dense()?;
        let m = DenseMatrix::identity(self.dim()).sub(&w.matmul(&h)).matmul(&r);
        Ok((0..self.dim()).map(|i| self.p[i] * m.get(i, i)).sum())
    }

    /// Expected reconstruction bias `E(x - x_mse)` for input mean `ex`:
    /// `(P+K)^{-1} Q^{-1} R H^T H K ex + Q^{-1} G ex`.
    pub fn bias_dense(&self, ex: &[f64]) -> Result<Vec<f64>> {
        let q_inv = self.q_dense()?.inverse()?;
        let pk_inv = self.p_plus_k_dense()?.inverse()?;
        let rh2k = self
            .h
            .with_poly(
                self.r
                    .multiply(self.h.poly())?
                    .multiply(self.h.poly())?
                    .multiply(&self.k)?,
            )?
            .materialize()?;
        let g = self.g_dense()?;
        let first = pk_inv.matvec(&q_inv.matvec(&rh2k.matvec(ex)));
        let second = q_inv.matvec(&g.matvec(ex));
        Ok(first.iter().zip(second.iter()).map(|(a, b)| a + b).collect())
    }

    /// Worst-case mean squared error
    /// `tr(P (d0^2 (WH - I)(H^T W^T - I) + W G W^T))`.
    pub fn f_wmse_eval(&self, w: &DenseMatrix) -> Result<f64> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case functional needs an energy bound".into())
        })?;
        let h = self.h_dense()?;
        let g = self.g_dense()?;
        let n = self.dim();
        let wh = w.matmul(&h).sub(&DenseMatrix::identity(n));
        let part1 = wh.matmul(&wh.transpose()).scale(d0 * d0);
        let part2 = w.matmul(&g).matmul(&w.transpose());
        let m = part1.add(&part2);
        Ok((0..n).map(|i| self.p[i] * m.get(i, i)).sum())
    }

    /// Worst-case minimum `d0^2 - d0^4 tr((d0^2 H H^T + G)^{-1} H P H^T)`.
    pub fn f_wmse_min(&self) -> Result<f64> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case functional needs an energy bound".into())
        })?;
        let inv = self.h.with_poly(self.worstcase_inverse_target()?)?.materialize()?.inverse()?;
        let h = self.h_dense()?;
        let mut ph = h.clone();
        row_scale(&mut ph, &self.p);
        let hpht = h.matmul(&ph.transpose());
        Ok(d0 * d0 - d0.powi(4) * trace_prod(&inv, &hpht))
    }

    /// Uniform-probability simplification `d0^2 / N * tr((d0^2 H H^T + G)^{-1} G)`.
    pub fn f_wmse_min_uniform(&self) -> Result<f64> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case functional needs an energy bound".into())
        })?;
        let inv = self.h.with_poly(self.worstcase_inverse_target()?)?.materialize()?.inverse()?;
        let g = self.g_dense()?;
        Ok(d0 * d0 / self.dim() as f64 * trace_prod(&inv, &g))
    }

    /// Singular-value form for i.i.d. noise of standard deviation `sigma`:
    /// `d0^2 sigma^2 / N * sum_i 1 / (d0^2 mu_i^2 + sigma^2)`.
    pub fn f_wmse_min_singular(&self, sigma: f64) -> Result<f64> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case functional needs an energy bound".into())
        })?;
        let sd = self.h.spectral()?;
        let n = self.dim();
        let sum: f64 = (0..n)
            .map(|i| {
                let mu = self.h.poly().evaluate(sd.lambda(i)).abs();
                1.0 / (d0 * d0 * mu * mu + sigma * sigma)
            })
            .sum();
        Ok(d0 * d0 * sigma * sigma / n as f64 * sum)
    }

    /// The eigenvalue-based worst-case error
    /// `d0^2 lmax((H^T W^T - I) P (W H - I)) + tr(P W G W^T)` with its
    /// sandwich bounds `(F_wmse / N, value, F_wmse)`.
    pub fn f_wmse_tilde_bounds(&self, w: &DenseMatrix) -> Result<(f64, f64, f64)> {
        let d0 = self.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case functional needs an energy bound".into())
        })?;
        let h = self.h_dense()?;
        let g = self.g_dense()?;
        let n = self.dim();
        let b = w.matmul(&h).sub(&DenseMatrix::identity(n));
        let mut pb = b.clone();
        row_scale(&mut pb, &self.p);
        let middle = b.transpose().matmul(&pb);
        let lmax = sym_lambda_max(&middle)?;
        let wgwt = w.matmul(&g).matmul(&w.transpose());
        let reg: f64 = (0..n).map(|i| self.p[i] * wgwt.get(i, i)).sum();
        let value = d0 * d0 * lmax + reg;
        let full = self.f_wmse_eval(w)?;
        Ok((full / n as f64, value, full))
    }
}

/// One inverse-filtering step with its approximant prebuilt.
#[derive(Debug, Clone)]
pub struct PreparedInverse {
    filter: PolyFilter,
    /// `(G_M filter, certified sup bound)`; `None` runs GD0 instead.
    approx: Option<(PolyFilter, f64)>,
}

impl PreparedInverse {
    pub fn solve(&self, y: &Signal, opts: &SolveOptions) -> Result<(Signal, IterTrace)> {
        let out = match &self.approx {
            None => gd0_solve(&self.filter, y, None, opts),
            Some((gm, b)) => quasi_newton_solve_checked(&self.filter, gm, *b, y, None, opts),
        };
        out.map_err(|f| f.error)
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.approx.as_ref().map(|(_, b)| *b)
    }
}

/// Reusable pipeline state for one `(problem, solver)` pair: prebuilt
/// approximants, the correlation post-filter and the Neumann scalars.
/// Build once, then run many trials.
#[derive(Debug, Clone)]
pub struct PreparedSolver {
    stochastic: PreparedInverse,
    worstcase: Option<PreparedInverse>,
    hr: PolyFilter,
    k_sup: f64,
    p_min: f64,
}

impl PreparedSolver {
    pub fn wiener0(
        &self,
        prob: &WienerProblem,
        y: &Signal,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        let _ = prob;
        let (z1, trace) = self.stochastic.solve(y, opts)?;
        let mut mv = *trace.matvecs.last().unwrap_or(&0);
        let w = self.hr.apply_counted(&z1, &mut mv)?;
        Ok(WienerResult {
            signal: w,
            inverse_trace: trace,
            neumann_iterations: 0,
            neumann_rate: 0.0,
            matvecs: mv,
        })
    }

    pub fn wiener_mse(
        &self,
        prob: &WienerProblem,
        y: &Signal,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        let part1 = self.wiener0(prob, y, opts)?;
        if prob.regularizer().is_zero() {
            // P cancels exactly: the regularized filter equals the
            // unregularized one
            return Ok(part1);
        }
        let sqrt_p: Vec<f64> = prob.p.iter().map(|p| p.sqrt()).collect();
        let z2_vals: Vec<f64> =
            part1.signal.values().iter().zip(&sqrt_p).map(|(v, s)| v * s).collect();
        let z2 = Signal::new(y.graph().clone(), z2_vals)?;
        let (z3, iters, neumann_mv) = prob.neumann_regularize(&z2, opts.max_iters, opts.rtol)?;
        let x_vals: Vec<f64> = z3.values().iter().zip(&sqrt_p).map(|(v, s)| v / s).collect();
        Ok(WienerResult {
            signal: Signal::new(y.graph().clone(), x_vals)?,
            matvecs: part1.matvecs + neumann_mv,
            neumann_iterations: iters,
            neumann_rate: if self.k_sup == 0.0 {
                0.0
            } else {
                self.k_sup / (self.k_sup + self.p_min)
            },
            inverse_trace: part1.inverse_trace,
        })
    }

    pub fn worstcase(
        &self,
        prob: &WienerProblem,
        y: &Signal,
        opts: &SolveOptions,
    ) -> Result<WienerResult> {
        let d0 = prob.delta0.ok_or_else(|| {
            CoreError::InvalidParameter("worst-case filtering needs an energy bound".into())
        })?;
        let prepared = self.worstcase.as_ref().ok_or_else(|| {
            CoreError::InvalidParameter("pipeline was prepared without an energy bound".into())
        })?;
        let (z, trace) = prepared.solve(y, opts)?;
        let mut mv = *trace.matvecs.last().unwrap_or(&0);
        let mut x = prob.h.apply_counted(&z, &mut mv)?;
        for v in x.values_mut() {
            *v *= d0 * d0;
        }
        Ok(WienerResult {
            signal: x,
            inverse_trace: trace,
            neumann_iterations: 0,
            neumann_rate: 0.0,
            matvecs: mv,
        })
    }
}

fn row_scale(m: &mut DenseMatrix, scale: &[f64]) {
    for (i, s) in scale.iter().enumerate() {
        for j in 0..m.cols {
            let v = m.get(i, j) * s;
            m.set(i, j, v);
        }
    }
}

fn trace_prod(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let n = a.rows;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += a.get(i, j) * b.get(j, i);
        }
    }
    acc
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_circulant;
    use crate::poly::bench_poly_h1;
    use crate::shift::Shift;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    fn lsym_filter(n: usize, q: &[usize], poly: MultiPoly) -> PolyFilter {
        let g = Arc::new(build_circulant(n, q).unwrap());
        let l = Arc::new(Shift::normalized_laplacian(g).unwrap());
        PolyFilter::new(vec![l], poly).unwrap()
    }

    fn random_signal(g: &Arc<crate::graph::Graph>, seed: u64) -> Signal {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let vals = (0..g.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Signal::new(g.clone(), vals).unwrap()
    }

    fn solver() -> ApproxSpec {
        ApproxSpec::jpa(0.0, -0.5, 4)
    }

    fn opts() -> SolveOptions {
        SolveOptions::default().with_rtol(1e-12).with_iters(400)
    }

    #[test]
    fn zero_regularizer_keeps_unregularized_output() {
        let h = lsym_filter(12, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::univariate(vec![1.0, 0.5]),
            MultiPoly::constant(1, 0.25),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let y = random_signal(h.graph(), 1);
        let w0 = prob.wiener0_apply(&y, &solver(), &opts()).unwrap();
        let w = prob.wiener_mse_apply(&y, &solver(), &opts()).unwrap();
        assert_eq!(w.neumann_iterations, 0);
        for (a, b) in w.signal.values().iter().zip(w0.signal.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noiseless_wiener0_inverts_the_filter() {
        let h = lsym_filter(16, &[1, 2], bench_poly_h1());
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.0),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let truth = random_signal(h.graph(), 2);
        let y = h.apply(&truth).unwrap();
        let rec = prob.wiener0_apply(&y, &solver(), &opts()).unwrap();
        for (a, b) in rec.signal.values().iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvector_input_gets_scalar_gain() {
        let h = lsym_filter(8, &[1], bench_poly_h1());
        let r = MultiPoly::univariate(vec![1.0, 0.5]);
        let g = MultiPoly::constant(1, 0.3);
        let prob = WienerProblem::new(
            h.clone(),
            r.clone(),
            g.clone(),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let sd = h.spectral().unwrap();
        let i = 3;
        let u: Vec<f64> = (0..8).map(|row| sd.basis().get(row, i)).collect();
        let y = Signal::new(h.graph().clone(), u.clone()).unwrap();
        let rec = prob.wiener0_apply(&y, &solver(), &opts()).unwrap();
        let lam = sd.lambda(i);
        let hv = h.poly().evaluate(lam);
        let rv = r.evaluate(lam);
        let gv = g.evaluate(lam);
        let gain = rv * hv / (hv * hv * rv + gv);
        for (a, b) in rec.signal.values().iter().zip(u.iter()) {
            assert!((a - gain * b).abs() < 1e-9, "{a} vs {}", gain * b);
        }
    }

    #[test]
    fn neumann_zero_regularizer_is_identity() {
        let h = lsym_filter(10, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let z2 = random_signal(h.graph(), 3);
        let (z3, iters, mv) = prob.neumann_regularize(&z2, 100, 1e-12).unwrap();
        assert_eq!(iters, 0);
        assert_eq!(mv, 0);
        assert_eq!(z3.values(), z2.values());
    }

    #[test]
    fn neumann_constant_regularizer_scalar_fixed_point() {
        // k = kappa constant, uniform P: z3 = z2 / (1 + N kappa)
        let n = 12usize;
        let kappa = 0.07;
        let h = lsym_filter(n, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, kappa),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let z2 = random_signal(h.graph(), 4);
        let (z3, iters, _) = prob.neumann_regularize(&z2, 4000, 1e-12).unwrap();
        let expect = 1.0 / (1.0 + n as f64 * kappa);
        let rate: f64 = kappa / (kappa + 1.0 / n as f64);
        let bound = rate.powi(iters as i32 + 1) * z2.norm();
        for (a, b) in z3.values().iter().zip(z2.values()) {
            let diff = (a - b * expect).abs();
            assert!(diff <= bound + 1e-12, "diff {diff} vs bound {bound}");
        }
    }

    #[test]
    fn tikhonov_zero_regularizer_returns_input() {
        let h = lsym_filter(8, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let y = random_signal(h.graph(), 5);
        let (x, _, _) = prob.tikhonov_apply(&y, 100, 1e-12).unwrap();
        assert_eq!(x.values(), y.values());
    }

    #[test]
    fn tikhonov_constant_regularizer_scalar_oracle() {
        let n = 10usize;
        let kappa = 0.05;
        let h = lsym_filter(n, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, kappa),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let y = random_signal(h.graph(), 6);
        let (x, _, _) = prob.tikhonov_apply(&y, 4000, 1e-13).unwrap();
        let expect = 1.0 / (1.0 + n as f64 * kappa);
        for (a, b) in x.values().iter().zip(y.values()) {
            assert!((a - b * expect).abs() < 1e-10);
        }
    }

    #[test]
    fn worstcase_scalar_shrinkage_for_identity_filter() {
        let n = 9usize;
        let sigma2 = 0.4;
        let d0 = 2.0;
        let h = lsym_filter(n, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, sigma2),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            Some(d0),
        )
        .unwrap();
        let y = random_signal(h.graph(), 7);
        let rec = prob.worstcase_wiener_apply(&y, &solver(), &opts()).unwrap();
        let gain = d0 * d0 / (d0 * d0 + sigma2);
        for (a, b) in rec.signal.values().iter().zip(y.values()) {
            assert!((a - gain * b).abs() < 1e-10);
        }
    }

    #[test]
    fn worstcase_noiseless_inverts() {
        let h = lsym_filter(12, &[1], bench_poly_h1());
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.0),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            Some(3.0),
        )
        .unwrap();
        let truth = random_signal(h.graph(), 8);
        let y = h.apply(&truth).unwrap();
        let rec = prob.worstcase_wiener_apply(&y, &solver(), &opts()).unwrap();
        for (a, b) in rec.signal.values().iter().zip(truth.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn worstcase_functional_identity_filter_closed_form() {
        let n = 8usize;
        let sigma2 = 0.25;
        let d0 = 1.5;
        let h = lsym_filter(n, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, sigma2),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            Some(d0),
        )
        .unwrap();
        let fmin = prob.f_wmse_min().unwrap();
        let expect = d0 * d0 * sigma2 / (d0 * d0 + sigma2);
        assert!((fmin - expect).abs() < 1e-10, "{fmin} vs {expect}");
        // all three routes agree
        let w = prob.w_wmse_dense().unwrap();
        assert!((prob.f_wmse_eval(&w).unwrap() - expect).abs() < 1e-10);
        assert!((prob.f_wmse_min_uniform().unwrap() - expect).abs() < 1e-10);
        assert!((prob.f_wmse_min_singular(sigma2.sqrt()).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn perfect_reconstruction_zeroes_tilde_functional() {
        let h = lsym_filter(8, &[1], bench_poly_h1());
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.0),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            Some(2.0),
        )
        .unwrap();
        let w = prob.h_dense().unwrap().inverse().unwrap();
        let (lo, mid, hi) = prob.f_wmse_tilde_bounds(&w).unwrap();
        assert!(lo.abs() < 1e-9 && mid.abs() < 1e-9 && hi.abs() < 1e-9);
    }

    #[test]
    fn wideband_invariants_enforced() {
        // identity H keeps tau = 1, but G = const I has G 1 != 0
        let h = lsym_filter(8, &[1], MultiPoly::constant(1, 1.0));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::univariate(vec![1.0, 0.5]),
            MultiPoly::constant(1, 0.2),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let y = random_signal(h.graph(), 9);
        match prob.wideband_wiener_apply(&y, &solver(), &opts()) {
            Err(CoreError::WideBandInvariant { what, .. }) => assert_eq!(what, "G 1"),
            other => panic!("expected invariant failure, got {other:?}"),
        }
        // Laplacian-shaped noise and regularizer satisfy the invariants on a
        // regular graph
        let ok = WienerProblem::new(
            h.clone(),
            MultiPoly::univariate(vec![1.0, 0.5]),
            MultiPoly::univariate(vec![0.0, 0.2]),
            MultiPoly::univariate(vec![0.0, 0.05]),
            Probability::Uniform,
            None,
        )
        .unwrap();
        assert!(ok.wideband_wiener_apply(&y, &solver(), &opts()).is_ok());
    }

    #[test]
    fn probability_validation() {
        let h = lsym_filter(4, &[1], MultiPoly::constant(1, 1.0));
        let bad_sum = Probability::Weights(vec![0.5, 0.5, 0.5, 0.5]);
        assert!(WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, 0.0),
            bad_sum,
            None
        )
        .is_err());
        let zero_entry = Probability::Weights(vec![0.5, 0.5, 0.0, 0.0]);
        assert!(WienerProblem::new(
            h,
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, 0.1),
            MultiPoly::constant(1, 0.0),
            zero_entry,
            None
        )
        .is_err());
    }

    #[test]
    fn positivity_certificate_failure_reported() {
        // g = -1 makes h^2 r + g sign-changing on the cube
        let h = lsym_filter(8, &[1], MultiPoly::univariate(vec![0.0, 1.0]));
        let prob = WienerProblem::new(
            h.clone(),
            MultiPoly::constant(1, 1.0),
            MultiPoly::constant(1, -1.0),
            MultiPoly::constant(1, 0.0),
            Probability::Uniform,
            None,
        )
        .unwrap();
        let y = random_signal(h.graph(), 10);
        assert!(matches!(
            prob.wiener0_apply(&y, &solver(), &opts()),
            Err(CoreError::PositivityFailure { .. })
        ));
    }
}
