//! Multivariate polynomials over a degree box, in the monomial basis or in
//! rescaled Jacobi / Chebyshev bases on a cube.
//!
//! Coefficient tensors are dense and row-major (last axis fastest); degree
//! boxes in this crate are tiny, so no sparse representation is attempted.

use crate::error::{CoreError, Result};
use crate::jacobi::{chebyshev_all, JacobiBasis};

/// Which basis the coefficient tensor refers to.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// Plain powers `t^n`.
    Monomial,
    /// Rescaled Jacobi polynomials `P_{n}^{(alpha,beta)}((2t-mu-nu)/(nu-mu))`
    /// per axis, on the given cube.
    Jacobi { alpha: f64, beta: f64, cube: Vec<(f64, f64)> },
    /// Rescaled Chebyshev polynomials `T_n((2t-mu-nu)/(nu-mu))` per axis.
    Chebyshev { cube: Vec<(f64, f64)> },
}

impl Basis {
    pub fn cube(&self) -> Option<&[(f64, f64)]> {
        match self {
            Basis::Monomial => None,
            Basis::Jacobi { cube, .. } => Some(cube),
            Basis::Chebyshev { cube } => Some(cube),
        }
    }
}

/// Polynomial in `d` variables with degree bounds `(L_1, ..., L_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    dims: usize,
    degrees: Vec<usize>,
    coeffs: Vec<f64>,
    basis: Basis,
}

fn box_len(degrees: &[usize]) -> usize {
    degrees.iter().map(|l| l + 1).product()
}

fn validate_cube(cube: &[(f64, f64)], dims: usize) -> Result<()> {
    if cube.len() != dims {
        return Err(CoreError::DimensionMismatch { expected: dims, got: cube.len() });
    }
    for &(lo, hi) in cube {
        if !(lo < hi) {
            return Err(CoreError::InvalidParameter(format!("degenerate cube axis [{lo}, {hi}]")));
        }
    }
    Ok(())
}

impl MultiPoly {
    pub fn new(degrees: Vec<usize>, coeffs: Vec<f64>, basis: Basis) -> Result<Self> {
        let dims = degrees.len();
        if dims == 0 {
            return Err(CoreError::InvalidParameter("polynomial needs at least 1 variable".into()));
        }
        if coeffs.len() != box_len(&degrees) {
            return Err(CoreError::DimensionMismatch {
                expected: box_len(&degrees),
                got: coeffs.len(),
            });
        }
        match &basis {
            Basis::Monomial => {}
            Basis::Jacobi { alpha, beta, cube } => {
                if !(*alpha > -1.0 && *beta > -1.0) {
                    return Err(CoreError::InvalidParameter(
                        "Jacobi basis needs alpha, beta > -1".into(),
                    ));
                }
                validate_cube(cube, dims)?;
            }
            Basis::Chebyshev { cube } => validate_cube(cube, dims)?,
        }
        Ok(Self { dims, degrees, coeffs, basis })
    }

    pub fn monomial(degrees: Vec<usize>, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(degrees, coeffs, Basis::Monomial)
    }

    /// Univariate monomial polynomial from ascending-power coefficients.
    pub fn univariate(coeffs: Vec<f64>) -> Self {
        let deg = coeffs.len().saturating_sub(1);
        Self::new(vec![deg], coeffs, Basis::Monomial).expect("consistent")
    }

    /// Constant polynomial in `d` variables.
    pub fn constant(dims: usize, value: f64) -> Self {
        Self::new(vec![0; dims], vec![value], Basis::Monomial).expect("consistent")
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// True when every stored coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Total number of shift applications one Horner/recurrence application
    /// of this polynomial costs; see the filter module for the schedule.
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        self.coeffs[self.flat_index(idx)]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims);
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            assert!(i <= self.degrees[k]);
            flat = flat * (self.degrees[k] + 1) + i;
        }
        flat
    }

    /// Iterates all multi-indices of the degree box in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let degrees = self.degrees.clone();
        let total = box_len(&degrees);
        (0..total).map(move |flat| {
            let mut idx = vec![0usize; degrees.len()];
            let mut rem = flat;
            for k in (0..degrees.len()).rev() {
                idx[k] = rem % (degrees[k] + 1);
                rem /= degrees[k] + 1;
            }
            idx
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    /// Coefficient-wise sum; operands must share dimension and basis.
    /// Degree boxes may differ (the result takes the per-axis max).
    pub fn add(&self, other: &MultiPoly) -> Result<Self> {
        if self.dims != other.dims {
            return Err(CoreError::DimensionMismatch { expected: self.dims, got: other.dims });
        }
        if self.basis != other.basis {
            return Err(CoreError::InvalidParameter("basis mismatch in polynomial add".into()));
        }
        let degrees: Vec<usize> =
            self.degrees.iter().zip(&other.degrees).map(|(a, b)| *a.max(b)).collect();
        let mut out = MultiPoly::new(degrees, vec![0.0; box_len(&{
            let d: Vec<usize> =
                self.degrees.iter().zip(&other.degrees).map(|(a, b)| *a.max(b)).collect();
            d
        })], self.basis.clone())?;
        for idx in self.indices() {
            let flat = out.flat_index(&idx);
            out.coeffs[flat] += self.coeff(&idx);
        }
        for idx in other.indices() {
            let flat = out.flat_index(&idx);
            out.coeffs[flat] += other.coeff(&idx);
        }
        Ok(out)
    }

    /// Exact coefficient product; monomial basis only.
    pub fn multiply(&self, other: &MultiPoly) -> Result<Self> {
        if self.dims != other.dims {
            return Err(CoreError::DimensionMismatch { expected: self.dims, got: other.dims });
        }
        if self.basis != Basis::Monomial || other.basis != Basis::Monomial {
            return Err(CoreError::InvalidParameter(
                "polynomial multiply requires the monomial basis".into(),
            ));
        }
        let degrees: Vec<usize> =
            self.degrees.iter().zip(&other.degrees).map(|(a, b)| a + b).collect();
        let mut out = MultiPoly::new(degrees.clone(), vec![0.0; box_len(&degrees)], Basis::Monomial)?;
        for ia in self.indices() {
            let ca = self.coeff(&ia);
            if ca == 0.0 {
                continue;
            }
            for ib in other.indices() {
                let sum: Vec<usize> = ia.iter().zip(&ib).map(|(a, b)| a + b).collect();
                let flat = out.flat_index(&sum);
                out.coeffs[flat] += ca * other.coeff(&ib);
            }
        }
        Ok(out)
    }

    /// Evaluates at a point. Monomial uses Horner per axis; orthogonal bases
    /// evaluate per-axis basis values by their recurrences and contract.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dims, "evaluation point dimension mismatch");
        match &self.basis {
            Basis::Monomial => horner_eval(&self.coeffs, &self.degrees, point),
            Basis::Jacobi { alpha, beta, cube } => {
                let basis = JacobiBasis::new(*alpha, *beta).expect("validated at construction");
                let mut axis_vals: Vec<Vec<f64>> = Vec::with_capacity(self.dims);
                for k in 0..self.dims {
                    let s = rescale(point[k], cube[k]);
                    let mut vals = Vec::new();
                    basis.eval_all(self.degrees[k], s, &mut vals);
                    axis_vals.push(vals);
                }
                self.contract(&axis_vals)
            }
            Basis::Chebyshev { cube } => {
                let mut axis_vals: Vec<Vec<f64>> = Vec::with_capacity(self.dims);
                for k in 0..self.dims {
                    let s = rescale(point[k], cube[k]);
                    let mut vals = Vec::new();
                    chebyshev_all(self.degrees[k], s, &mut vals);
                    axis_vals.push(vals);
                }
                self.contract(&axis_vals)
            }
        }
    }

    /// Shorthand for univariate evaluation.
    pub fn eval1(&self, t: f64) -> f64 {
        self.evaluate(&[t])
    }

    fn contract(&self, axis_vals: &[Vec<f64>]) -> f64 {
        let mut acc = 0.0;
        for (flat, idx) in self.indices().enumerate() {
            let mut term = self.coeffs[flat];
            if term == 0.0 {
                continue;
            }
            for (k, &i) in idx.iter().enumerate() {
                term *= axis_vals[k][i];
            }
            acc += term;
        }
        acc
    }

    /// Converts any basis to the monomial basis (exact expansion; fine for
    /// the small degrees used here, ill-conditioned for large ones).
    pub fn to_monomial(&self) -> MultiPoly {
        match &self.basis {
            Basis::Monomial => self.clone(),
            Basis::Jacobi { alpha, beta, cube } => {
                let basis = JacobiBasis::new(*alpha, *beta).expect("validated");
                let tables: Vec<Vec<Vec<f64>>> = (0..self.dims)
                    .map(|k| jacobi_monomial_table(&basis, self.degrees[k], cube[k]))
                    .collect();
                self.expand_with_tables(&tables)
            }
            Basis::Chebyshev { cube } => {
                let tables: Vec<Vec<Vec<f64>>> = (0..self.dims)
                    .map(|k| chebyshev_monomial_table(self.degrees[k], cube[k]))
                    .collect();
                self.expand_with_tables(&tables)
            }
        }
    }

    /// `tables[k][n]` = monomial coefficients (in the original variable) of
    /// the `n`-th basis polynomial on axis `k`.
    fn expand_with_tables(&self, tables: &[Vec<Vec<f64>>]) -> MultiPoly {
        let degrees = self.degrees.clone();
        let mut out =
            MultiPoly::new(degrees.clone(), vec![0.0; box_len(&degrees)], Basis::Monomial)
                .expect("consistent");
        for (flat, idx) in self.indices().enumerate() {
            let c = self.coeffs[flat];
            if c == 0.0 {
                continue;
            }
            // tensor product of per-axis monomial coefficient vectors
            let mut partial: Vec<(Vec<usize>, f64)> = vec![(vec![], c)];
            for (k, &n) in idx.iter().enumerate() {
                let axis_coeffs = &tables[k][n];
                let mut next = Vec::with_capacity(partial.len() * axis_coeffs.len());
                for (prefix, w) in &partial {
                    for (p, &a) in axis_coeffs.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        let mut np = prefix.clone();
                        np.push(p);
                        next.push((np, w * a));
                    }
                }
                partial = next;
            }
            for (mono_idx, w) in partial {
                let flat = out.flat_index(&mono_idx);
                out.coeffs[flat] += w;
            }
        }
        out
    }

    /// Serializes in the text format `d=<dim>; L=<l1,...,ld>; coeffs=<row-major list>`.
    /// Only monomial polynomials are serialized.
    pub fn to_text(&self) -> Result<String> {
        if self.basis != Basis::Monomial {
            return Err(CoreError::InvalidParameter(
                "text format carries monomial polynomials only".into(),
            ));
        }
        let degs: Vec<String> = self.degrees.iter().map(|l| l.to_string()).collect();
        let coeffs: Vec<String> = self.coeffs.iter().map(|c| format!("{c:.17e}")).collect();
        Ok(format!("d={}; L={}; coeffs={}", self.dims, degs.join(","), coeffs.join(",")))
    }

    /// Parses the text format produced by [`MultiPoly::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut dims: Option<usize> = None;
        let mut degrees: Option<Vec<usize>> = None;
        let mut coeffs: Option<Vec<f64>> = None;
        for part in text.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part.split_once('=').ok_or(CoreError::Parse {
                line: 1,
                msg: format!("expected key=value, got `{part}`"),
            })?;
            match key.trim() {
                "d" => {
                    dims = Some(value.trim().parse().map_err(|_| CoreError::Parse {
                        line: 1,
                        msg: format!("invalid dimension `{value}`"),
                    })?)
                }
                "L" => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    degrees = Some(parsed.map_err(|_| CoreError::Parse {
                        line: 1,
                        msg: format!("invalid degree list `{value}`"),
                    })?);
                }
                "coeffs" => {
                    let parsed: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    coeffs = Some(parsed.map_err(|_| CoreError::Parse {
                        line: 1,
                        msg: format!("invalid coefficient list `{value}`"),
                    })?);
                }
                other => {
                    return Err(CoreError::Parse {
                        line: 1,
                        msg: format!("unknown polynomial key `{other}`"),
                    })
                }
            }
        }
        let dims = dims.ok_or(CoreError::Parse { line: 1, msg: "missing `d=`".into() })?;
        let degrees = degrees.ok_or(CoreError::Parse { line: 1, msg: "missing `L=`".into() })?;
        let coeffs = coeffs.ok_or(CoreError::Parse { line: 1, msg: "missing `coeffs=`".into() })?;
        if degrees.len() != dims {
            return Err(CoreError::Parse {
                line: 1,
                msg: format!("degree list length {} != d={dims}", degrees.len()),
            });
        }
        MultiPoly::monomial(degrees, coeffs)
    }
}

fn rescale(t: f64, (mu, nu): (f64, f64)) -> f64 {
    (2.0 * t - mu - nu) / (nu - mu)
}

/// Recursive per-axis Horner evaluation of a row-major coefficient tensor.
fn horner_eval(coeffs: &[f64], degrees: &[usize], point: &[f64]) -> f64 {
    if degrees.len() == 1 {
        let t = point[0];
        let mut acc = coeffs[degrees[0]];
        for i in (0..degrees[0]).rev() {
            acc = acc * t + coeffs[i];
        }
        return acc;
    }
    let block = box_len(&degrees[1..]);
    let t = point[0];
    let l = degrees[0];
    let mut acc = horner_eval(&coeffs[l * block..(l + 1) * block], &degrees[1..], &point[1..]);
    for i in (0..l).rev() {
        acc = acc * t + horner_eval(&coeffs[i * block..(i + 1) * block], &degrees[1..], &point[1..]);
    }
    acc
}

/// Monomial expansion (in the original variable `t` on the given interval) of
/// the rescaled Jacobi polynomials up to degree `max_n`.
fn jacobi_monomial_table(basis: &JacobiBasis, max_n: usize, interval: (f64, f64)) -> Vec<Vec<f64>> {
    let (a, b) = affine_to_reference(interval);
    // p1 = (alpha+beta+2)/2 * s + (alpha-beta)/2 with s = a t + b
    let c1 = 0.5 * (basis.alpha + basis.beta + 2.0);
    let c0 = 0.5 * (basis.alpha - basis.beta);
    let mut table: Vec<Vec<f64>> = vec![vec![1.0]];
    if max_n >= 1 {
        table.push(vec![c0 + c1 * b, c1 * a]);
    }
    for n in 2..=max_n {
        let (a1, a2, a3) = basis.recurrence(n);
        // P_n = (a1 s - a2) P_{n-1} - a3 P_{n-2}, with s = a t + b
        let prev = &table[n - 1];
        let prev2 = &table[n - 2];
        let mut next = vec![0.0; n + 1];
        for (p, &c) in prev.iter().enumerate() {
            next[p + 1] += a1 * a * c; // a1 * (a t) * P_{n-1}
            next[p] += (a1 * b - a2) * c; // (a1 b - a2) * P_{n-1}
        }
        for (p, &c) in prev2.iter().enumerate() {
            next[p] -= a3 * c;
        }
        table.push(next);
    }
    table
}

/// Monomial expansion of the rescaled Chebyshev polynomials.
fn chebyshev_monomial_table(max_n: usize, interval: (f64, f64)) -> Vec<Vec<f64>> {
    let (a, b) = affine_to_reference(interval);
    let mut table: Vec<Vec<f64>> = vec![vec![1.0]];
    if max_n >= 1 {
        table.push(vec![b, a]);
    }
    for n in 2..=max_n {
        let prev = &table[n - 1];
        let prev2 = &table[n - 2];
        let mut next = vec![0.0; n + 1];
        for (p, &c) in prev.iter().enumerate() {
            next[p + 1] += 2.0 * a * c;
            next[p] += 2.0 * b * c;
        }
        for (p, &c) in prev2.iter().enumerate() {
            next[p] -= c;
        }
        table.push(next);
    }
    table
}

/// Coefficients of `s = a t + b` mapping `[mu, nu]` onto `[-1, 1]`.
fn affine_to_reference((mu, nu): (f64, f64)) -> (f64, f64) {
    (2.0 / (nu - mu), -(mu + nu) / (nu - mu))
}

/// The running example filter polynomial `(9/4 - t)(3 + t)` used by the
/// benchmark harness, expanded in the monomial basis.
pub fn bench_poly_h1() -> MultiPoly {
    MultiPoly::univariate(vec![27.0 / 4.0, -0.75, -1.0])
}
