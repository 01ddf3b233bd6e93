//! Polynomial graph filters `h(S_1, ..., S_d)` applied through sparse shift
//! recurrences.
//!
//! The apply engine never forms a matrix. It processes the coefficient tensor
//! one axis at a time: basis vectors along the last axis by the forward
//! recurrence (or plain powers), then vector-coefficient Horner / Clenshaw
//! sweeps for the remaining axes. Every sparse matvec is counted; matvecs are
//! exactly the one-hop communication rounds of the distributed realization.

use std::sync::{Arc, OnceLock};

use crate::dense::DenseMatrix;
use crate::error::{CoreError, Result};
use crate::jacobi::JacobiBasis;
use crate::poly::{Basis, MultiPoly};
use crate::shift::Shift;
use crate::signal::Signal;
use crate::spectral::SpectralData;

/// Running count of sparse shift applications.
pub type MatvecCount = usize;

/// Anything that maps a vertex vector to a vertex vector. The quasi-Newton
/// solver is generic over this, so dense test oracles can stand in for a
/// polynomial approximation filter.
pub trait GraphOperator {
    fn op_dim(&self) -> usize;
    fn apply_op(&self, x: &[f64], mv: &mut MatvecCount) -> Vec<f64>;
}

/// A multivariate polynomial evaluated at commuting graph shifts.
#[derive(Debug, Clone)]
pub struct PolyFilter {
    shifts: Vec<Arc<Shift>>,
    poly: MultiPoly,
    spectral_seed: u64,
    spectral: Arc<OnceLock<Arc<SpectralData>>>,
}

impl PolyFilter {
    /// Builds a filter from raw shifts. The joint spectrum is computed lazily
    /// (seeded by `spectral_seed`, default 0) when an operation needs it.
    pub fn new(shifts: Vec<Arc<Shift>>, poly: MultiPoly) -> Result<Self> {
        if shifts.is_empty() {
            return Err(CoreError::InvalidParameter("filter needs at least one shift".into()));
        }
        if poly.dims() != shifts.len() {
            return Err(CoreError::DimensionMismatch {
                expected: shifts.len(),
                got: poly.dims(),
            });
        }
        let g0 = shifts[0].graph();
        for s in shifts.iter().skip(1) {
            if !Arc::ptr_eq(s.graph(), g0) {
                return Err(CoreError::GraphMismatch);
            }
        }
        Ok(Self { shifts, poly, spectral_seed: 0, spectral: Arc::new(OnceLock::new()) })
    }

    /// Builds a filter over an already-computed joint spectrum.
    pub fn from_spectral(spectral: Arc<SpectralData>, poly: MultiPoly) -> Result<Self> {
        let shifts = spectral.shifts().to_vec();
        let f = Self::new(shifts, poly)?;
        let _ = f.spectral.set(spectral);
        Ok(f)
    }

    pub fn with_spectral_seed(mut self, seed: u64) -> Self {
        self.spectral_seed = seed;
        self
    }

    /// Same shifts (and cached spectrum), different polynomial.
    pub fn with_poly(&self, poly: MultiPoly) -> Result<Self> {
        if poly.dims() != self.shifts.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.shifts.len(),
                got: poly.dims(),
            });
        }
        Ok(Self {
            shifts: self.shifts.clone(),
            poly,
            spectral_seed: self.spectral_seed,
            spectral: self.spectral.clone(),
        })
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn shifts(&self) -> &[Arc<Shift>] {
        &self.shifts
    }

    pub fn graph(&self) -> &Arc<crate::graph::Graph> {
        self.shifts[0].graph()
    }

    pub fn dim(&self) -> usize {
        self.shifts[0].dim()
    }

    /// Joint spectrum of the filter's shifts, computed once and cached.
    pub fn spectral(&self) -> Result<Arc<SpectralData>> {
        if let Some(sd) = self.spectral.get() {
            return Ok(sd.clone());
        }
        let sd = Arc::new(SpectralData::compute(self.shifts.clone(), self.spectral_seed)?);
        let _ = self.spectral.set(sd.clone());
        Ok(self.spectral.get().cloned().unwrap_or(sd))
    }

    /// Applies the filter, counting sparse matvecs into `mv`.
    pub fn apply_counted(&self, x: &Signal, mv: &mut MatvecCount) -> Result<Signal> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let out = self.apply_slice(x.values(), mv);
        Signal::new(x.graph().clone(), out)
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        let mut mv = 0;
        self.apply_counted(x, &mut mv)
    }

    /// Core engine on raw vectors.
    pub fn apply_slice(&self, x: &[f64], mv: &mut MatvecCount) -> Vec<f64> {
        let degrees = self.poly.degrees().to_vec();
        let d = degrees.len();
        // basis vectors along the last axis
        let last = d - 1;
        let q = self.basis_vectors(last, degrees[last], x, mv);
        // collapse the last axis: vectors indexed by the remaining box
        let remaining: usize = degrees[..last].iter().map(|l| l + 1).product();
        let mut current: Vec<Vec<f64>> = Vec::with_capacity(remaining);
        let ld = degrees[last] + 1;
        for fiber in 0..remaining {
            let mut acc = vec![0.0; x.len()];
            for nd in 0..ld {
                let c = self.poly.coeffs()[fiber * ld + nd];
                if c != 0.0 {
                    for (a, b) in acc.iter_mut().zip(q[nd].iter()) {
                        *a += c * b;
                    }
                }
            }
            current.push(acc);
        }
        // sweep the remaining axes from last-1 down to 0
        for k in (0..last).rev() {
            let lk = degrees[k] + 1;
            let fibers = current.len() / lk;
            let mut next: Vec<Vec<f64>> = Vec::with_capacity(fibers);
            for f in 0..fibers {
                let fiber: Vec<Vec<f64>> =
                    (0..lk).map(|i| std::mem::take(&mut current[f * lk + i])).collect();
                next.push(self.combine_axis(k, fiber, mv));
            }
            current = next;
        }
        current.pop().expect("one vector remains")
    }

    /// `out[n] = B_n(shift_k) x` for `n = 0..=max_n` in the filter's basis.
    fn basis_vectors(&self, axis: usize, max_n: usize, x: &[f64], mv: &mut MatvecCount) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(max_n + 1);
        out.push(x.to_vec());
        if max_n == 0 {
            return out;
        }
        match self.poly.basis() {
            Basis::Monomial => {
                for n in 1..=max_n {
                    let prev = &out[n - 1];
                    out.push(self.raw_matvec(axis, prev, mv));
                }
            }
            Basis::Jacobi { alpha, beta, cube } => {
                let basis = JacobiBasis::new(*alpha, *beta).expect("validated");
                let (sa, sb) = rescale_coeffs(cube[axis]);
                let a0 = 0.5 * (alpha + beta + 2.0);
                let b0 = 0.5 * (alpha - beta);
                // q1 = (a0 s + b0) x
                let sx = self.scaled_matvec(axis, &out[0], sa, sb, mv);
                let q1: Vec<f64> =
                    sx.iter().zip(out[0].iter()).map(|(s, x)| a0 * s + b0 * x).collect();
                out.push(q1);
                for n in 2..=max_n {
                    let (a1, a2, a3) = basis.recurrence(n);
                    let sprev = self.scaled_matvec(axis, &out[n - 1], sa, sb, mv);
                    let next: Vec<f64> = (0..x.len())
                        .map(|i| a1 * sprev[i] - a2 * out[n - 1][i] - a3 * out[n - 2][i])
                        .collect();
                    out.push(next);
                }
            }
            Basis::Chebyshev { cube } => {
                let (sa, sb) = rescale_coeffs(cube[axis]);
                out.push(self.scaled_matvec(axis, &out[0], sa, sb, mv));
                for n in 2..=max_n {
                    let sprev = self.scaled_matvec(axis, &out[n - 1], sa, sb, mv);
                    let next: Vec<f64> = (0..x.len())
                        .map(|i| 2.0 * sprev[i] - out[n - 2][i])
                        .collect();
                    out.push(next);
                }
            }
        }
        out
    }

    /// Evaluates `sum_n B_n(shift_k) v_n` over one axis by Horner (monomial)
    /// or Clenshaw (orthogonal bases), consuming exactly `len-1` matvecs.
    fn combine_axis(&self, axis: usize, vs: Vec<Vec<f64>>, mv: &mut MatvecCount) -> Vec<f64> {
        let l = vs.len() - 1;
        if l == 0 {
            return vs.into_iter().next().unwrap();
        }
        match self.poly.basis() {
            Basis::Monomial => {
                let mut vs = vs;
                let mut y = vs.pop().unwrap();
                for i in (0..l).rev() {
                    let sy = self.raw_matvec(axis, &y, mv);
                    y = sy;
                    for (a, b) in y.iter_mut().zip(vs[i].iter()) {
                        *a += b;
                    }
                }
                y
            }
            Basis::Jacobi { alpha, beta, cube } => {
                let basis = JacobiBasis::new(*alpha, *beta).expect("validated");
                let (sa, sb) = rescale_coeffs(cube[axis]);
                // recurrence step to n+1: coefficients (A_n, B_n, C_n)
                let step = |n: usize| -> (f64, f64, f64) {
                    if n == 0 {
                        (0.5 * (alpha + beta + 2.0), 0.5 * (alpha - beta), 0.0)
                    } else {
                        let (a1, a2, a3) = basis.recurrence(n + 1);
                        (a1, -a2, -a3)
                    }
                };
                self.clenshaw(axis, vs, sa, sb, step, mv)
            }
            Basis::Chebyshev { cube } => {
                let (sa, sb) = rescale_coeffs(cube[axis]);
                let step = |n: usize| -> (f64, f64, f64) {
                    if n == 0 {
                        (1.0, 0.0, 0.0)
                    } else {
                        (2.0, 0.0, -1.0)
                    }
                };
                self.clenshaw(axis, vs, sa, sb, step, mv)
            }
        }
    }

    /// Backward Clenshaw with vector coefficients:
    /// `b_n = v_n + (A_n S + B_n) b_{n+1} + C_{n+1} b_{n+2}`, result `b_0`.
    fn clenshaw(
        &self,
        axis: usize,
        vs: Vec<Vec<f64>>,
        sa: f64,
        sb: f64,
        step: impl Fn(usize) -> (f64, f64, f64),
        mv: &mut MatvecCount,
    ) -> Vec<f64> {
        let l = vs.len() - 1;
        let n_vert = vs[0].len();
        let mut b1: Vec<f64> = Vec::new(); // b_{n+1}
        let mut b2: Vec<f64> = Vec::new(); // b_{n+2}
        let mut vs = vs;
        for n in (0..=l).rev() {
            let vn = std::mem::take(&mut vs[n]);
            let bn = if b1.is_empty() {
                vn
            } else {
                let (an, bnc, _) = step(n);
                let sb1 = self.scaled_matvec(axis, &b1, sa, sb, mv);
                let (_, _, c_next) = step(n + 1);
                let mut out = vn;
                for i in 0..n_vert {
                    out[i] += an * sb1[i] + bnc * b1[i];
                    if !b2.is_empty() {
                        out[i] += c_next * b2[i];
                    }
                }
                out
            };
            b2 = std::mem::replace(&mut b1, bn);
        }
        b1
    }

    fn raw_matvec(&self, axis: usize, x: &[f64], mv: &mut MatvecCount) -> Vec<f64> {
        *mv += 1;
        self.shifts[axis].matvec(x)
    }

    /// One application of the cube-rescaled shift `(2 S - (mu+nu) I) / (nu-mu)`.
    fn scaled_matvec(&self, axis: usize, x: &[f64], sa: f64, sb: f64, mv: &mut MatvecCount) -> Vec<f64> {
        *mv += 1;
        let mut y = self.shifts[axis].matvec(x);
        for (yi, xi) in y.iter_mut().zip(x.iter()) {
            *yi = sa * *yi + sb * xi;
        }
        y
    }

    /// Static matvec/round count of one application with this coefficient box.
    pub fn apply_schedule_matvecs(&self) -> usize {
        schedule_matvecs(self.poly.degrees())
    }

    /// Dense matrix `U diag(h(lambda_i)) U^T`; requires the joint spectrum
    /// and `n <= limit`.
    pub fn materialize_with_limit(&self, limit: usize) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > limit {
            return Err(CoreError::DenseLimit { n, limit });
        }
        let sd = self.spectral()?;
        let u = sd.basis();
        let hvals: Vec<f64> = (0..n).map(|i| self.poly.evaluate(sd.lambda(i))).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += u.get(i, k) * hvals[k] * u.get(j, k);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub const DENSE_LIMIT: usize = 2048;

    pub fn materialize(&self) -> Result<DenseMatrix> {
        self.materialize_with_limit(Self::DENSE_LIMIT)
    }

    /// `(min, max)` of `h` over the joint spectrum.
    pub fn spectral_range(&self) -> Result<(f64, f64)> {
        let sd = self.spectral()?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let v = self.poly.evaluate(sd.lambda(i));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

impl GraphOperator for PolyFilter {
    fn op_dim(&self) -> usize {
        self.dim()
    }

    fn apply_op(&self, x: &[f64], mv: &mut MatvecCount) -> Vec<f64> {
        self.apply_slice(x, mv)
    }
}

/// Matvec count of the axis-sweep schedule for a degree box.
pub fn schedule_matvecs(degrees: &[usize]) -> usize {
    let d = degrees.len();
    let mut total = degrees[d - 1];
    for k in 0..d.saturating_sub(1) {
        let fibers: usize = degrees[..k].iter().map(|l| l + 1).product();
        total += fibers * degrees[k];
    }
    total
}

fn rescale_coeffs((mu, nu): (f64, f64)) -> (f64, f64) {
    (2.0 / (nu - mu), -(mu + nu) / (nu - mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_circulant;
    use crate::poly::bench_poly_h1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn lsym_cycle(n: usize) -> (Arc<crate::graph::Graph>, Arc<Shift>) {
        let g = Arc::new(build_circulant(n, &[1]).unwrap());
        let l = Arc::new(Shift::normalized_laplacian(g.clone()).unwrap());
        (g, l)
    }

    fn random_signal(g: &Arc<crate::graph::Graph>, seed: u64) -> Signal {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let vals = (0..g.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Signal::new(g.clone(), vals).unwrap()
    }

    #[test]
    fn constant_filter_is_identity_scaling() {
        let (g, l) = lsym_cycle(6);
        let f = PolyFilter::new(vec![l], MultiPoly::constant(1, 1.0)).unwrap();
        let x = random_signal(&g, 1);
        let mut mv = 0;
        let y = f.apply_counted(&x, &mut mv).unwrap();
        assert_eq!(mv, 0);
        assert_eq!(x.values(), y.values());
    }

    #[test]
    fn linear_filter_single_edge() {
        let g = Arc::new(crate::graph::Graph::from_edges(2, [(0, 1)]).unwrap());
        let l = Arc::new(Shift::normalized_laplacian(g.clone()).unwrap());
        let f = PolyFilter::new(vec![l], MultiPoly::univariate(vec![0.0, 1.0])).unwrap();
        let x = Signal::new(g, vec![1.0, 0.0]).unwrap();
        let mut mv = 0;
        let y = f.apply_counted(&x, &mut mv).unwrap();
        assert_eq!(mv, 1);
        assert_eq!(y.values(), &[1.0, -1.0]);
    }

    #[test]
    fn apply_matches_dense_spectral_oracle() {
        let (g, l) = lsym_cycle(8);
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        let x = random_signal(&g, 3);
        let y = f.apply(&x).unwrap();
        let dense = f.materialize().unwrap();
        let oracle = dense.matvec(x.values());
        for (a, b) in y.values().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn materialize_identity_poly() {
        let (_, l) = lsym_cycle(5);
        let f = PolyFilter::new(vec![l], MultiPoly::constant(1, 1.0)).unwrap();
        let m = f.materialize().unwrap();
        assert!(m.sub(&DenseMatrix::identity(5)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn materialize_h1_on_four_cycle_has_mapped_spectrum() {
        let (_, l) = lsym_cycle(4);
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        let m = f.materialize().unwrap();
        let eig = crate::dense::sym_eigen(&m).unwrap();
        // spectrum {0,1,1,2} maps through h1 to {6.75, 5, 5, 1.25}
        let expect = [1.25, 5.0, 5.0, 6.75];
        for (v, e) in eig.values.iter().zip(expect.iter()) {
            assert!((v - e).abs() < 1e-10, "{v} vs {e}");
        }
    }

    #[test]
    fn materialize_times_x_equals_apply() {
        let (g, l) = lsym_cycle(12);
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        let x = random_signal(&g, 7);
        let y = f.apply(&x).unwrap();
        let oracle = f.materialize().unwrap().matvec(x.values());
        for (a, b) in y.values().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-11 * b.abs().max(1.0));
        }
    }

    #[test]
    fn spectral_range_h1_four_cycle() {
        let (_, l) = lsym_cycle(4);
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        let (lo, hi) = f.spectral_range().unwrap();
        assert!((lo - 1.25).abs() < 1e-10);
        assert!((hi - 6.75).abs() < 1e-10);
        let gamma_opt = 2.0 / (lo + hi);
        assert!((gamma_opt - 0.25).abs() < 1e-12);
    }

    #[test]
    fn spectral_range_constant_and_linear() {
        let (_, l) = lsym_cycle(6);
        let f = PolyFilter::new(vec![l.clone()], MultiPoly::constant(1, 3.5)).unwrap();
        let (lo, hi) = f.spectral_range().unwrap();
        assert_eq!((lo, hi), (3.5, 3.5));
        let f = PolyFilter::new(vec![l], MultiPoly::univariate(vec![0.0, 1.0])).unwrap();
        let (lo, hi) = f.spectral_range().unwrap();
        assert!(lo.abs() < 1e-10);
        assert!(hi <= 2.0 + 1e-10);
    }

    #[test]
    fn apply_is_linear() {
        let (g, l) = lsym_cycle(10);
        let f = PolyFilter::new(vec![l], bench_poly_h1()).unwrap();
        let x = random_signal(&g, 11);
        let y = random_signal(&g, 12);
        let (a, b) = (0.7, -1.3);
        let mut combo = Signal::zeros(g.clone());
        combo.axpy(a, &x);
        combo.axpy(b, &y);
        let lhs = f.apply(&combo).unwrap();
        let fx = f.apply(&x).unwrap();
        let fy = f.apply(&y).unwrap();
        for i in 0..10 {
            let rhs = a * fx.values()[i] + b * fy.values()[i];
            assert!((lhs.values()[i] - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn commuting_filters_commute() {
        let (g, l) = lsym_cycle(9);
        let f = PolyFilter::new(vec![l.clone()], bench_poly_h1()).unwrap();
        let p2 = MultiPoly::univariate(vec![0.5, 1.0, 0.0, -0.25]);
        let h = PolyFilter::new(vec![l], p2).unwrap();
        let x = random_signal(&g, 13);
        let fg = f.apply(&h.apply(&x).unwrap()).unwrap();
        let gf = h.apply(&f.apply(&x).unwrap()).unwrap();
        for (a, b) in fg.values().iter().zip(gf.values().iter()) {
            assert!((a - b).abs() < 1e-11 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matvec_count_is_degree_for_univariate_horner() {
        let (g, l) = lsym_cycle(8);
        for deg in 0..5usize {
            let mut coeffs = vec![0.25; deg + 1];
            coeffs[deg] = 1.0;
            let f = PolyFilter::new(vec![l.clone()], MultiPoly::univariate(coeffs)).unwrap();
            let x = random_signal(&g, 17);
            let mut mv = 0;
            f.apply_counted(&x, &mut mv).unwrap();
            assert_eq!(mv, deg);
            assert_eq!(f.apply_schedule_matvecs(), deg);
        }
    }

    #[test]
    fn jacobi_basis_apply_equals_monomial_converted() {
        let (g, l) = lsym_cycle(16);
        let cube = vec![(0.0, 2.0)];
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let coeffs: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        for basis in [
            Basis::Jacobi { alpha: 0.0, beta: -0.5, cube: cube.clone() },
            Basis::Chebyshev { cube: cube.clone() },
        ] {
            let p = MultiPoly::new(vec![4], coeffs.clone(), basis).unwrap();
            let f = PolyFilter::new(vec![l.clone()], p.clone()).unwrap();
            let fm = PolyFilter::new(vec![l.clone()], p.to_monomial()).unwrap();
            let x = random_signal(&g, 29);
            let mut mv = 0;
            let a = f.apply_counted(&x, &mut mv).unwrap();
            assert_eq!(mv, 4, "recurrence apply costs degree matvecs");
            let b = fm.apply(&x).unwrap();
            for (u, v) in a.values().iter().zip(b.values().iter()) {
                assert!((u - v).abs() < 1e-10 * v.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn bivariate_apply_matches_dense_oracle() {
        let n = 12;
        let g = Arc::new(build_circulant(n, &[1, 2]).unwrap());
        let s1 = Arc::new(Shift::circulant_generator_adjacency(g.clone(), &[1]).unwrap());
        let s2 = Arc::new(Shift::circulant_generator_adjacency(g.clone(), &[2]).unwrap());
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let coeffs: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = MultiPoly::monomial(vec![1, 2], coeffs).unwrap();
        let f = PolyFilter::new(vec![s1.clone(), s2.clone()], p.clone()).unwrap();
        let x = random_signal(&g, 37);

        // dense oracle: evaluate the polynomial on dense matrices directly
        let d1 = s1.to_dense();
        let d2 = s2.to_dense();
        let mut acc = DenseMatrix::zeros(n, n);
        for idx in p.indices() {
            let c = p.coeff(&idx);
            let mut term = DenseMatrix::identity(n).scale(c);
            for _ in 0..idx[0] {
                term = term.matmul(&d1);
            }
            for _ in 0..idx[1] {
                term = term.matmul(&d2);
            }
            acc = acc.add(&term);
        }
        let oracle = acc.matvec(x.values());
        let mut mv = 0;
        let y = f.apply_counted(&x, &mut mv).unwrap();
        assert_eq!(mv, schedule_matvecs(&[1, 2]));
        assert_eq!(mv, 3); // L2 + L1 for d=2
        for (a, b) in y.values().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-11 * b.abs().max(1.0));
        }
    }

    #[test]
    fn bivariate_jacobi_basis_matches_monomial_expansion() {
        let n = 10;
        let g = Arc::new(build_circulant(n, &[1, 2]).unwrap());
        let s1 = Arc::new(Shift::circulant_generator_adjacency(g.clone(), &[1]).unwrap());
        let s2 = Arc::new(Shift::circulant_generator_adjacency(g.clone(), &[2]).unwrap());
        let cube = vec![(-2.1, 2.1), (-2.1, 2.1)];
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let coeffs: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = MultiPoly::new(
            vec![2, 2],
            coeffs,
            Basis::Jacobi { alpha: 0.5, beta: 0.5, cube },
        )
        .unwrap();
        let f = PolyFilter::new(vec![s1.clone(), s2.clone()], p.clone()).unwrap();
        let fm = PolyFilter::new(vec![s1, s2], p.to_monomial()).unwrap();
        let x = random_signal(&g, 43);
        let a = f.apply(&x).unwrap();
        let b = fm.apply(&x).unwrap();
        for (u, v) in a.values().iter().zip(b.values().iter()) {
            assert!((u - v).abs() < 1e-10 * v.abs().max(1.0), "{u} vs {v}");
        }
    }
}
