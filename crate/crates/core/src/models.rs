//! Random graph-signal models, structured noise, deterministic test signals
//! and SNR metrics live here; the Signal type itself is in `signal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::dense::DenseMatrix;
use crate::error::{CoreError, Result};
use crate::filter::PolyFilter;
use crate::signal::Signal;

/// Gaussian signal model with covariance `r(S_1,...,S_d)` and constant mean.
/// Stationary signals have zero mean; wide-band stationary signals have mean
/// `c * 1` with `c != 0` and the same polynomial covariance structure.
#[derive(Debug, Clone)]
pub struct StationaryModel {
    covariance: PolyFilter,
    mean: f64,
    factor: DenseMatrix,
}

impl StationaryModel {
    /// Zero-mean stationary model.
    pub fn stationary(covariance: PolyFilter) -> Result<Self> {
        Self::build(covariance, 0.0)
    }

    /// Wide-band stationary model with mean `c * 1`, `c != 0`.
    pub fn wide_band(covariance: PolyFilter, c: f64) -> Result<Self> {
        if c == 0.0 {
            return Err(CoreError::InvalidParameter(
                "wide-band mean must be nonzero (use the stationary constructor)".into(),
            ));
        }
        Self::build(covariance, c)
    }

    fn build(covariance: PolyFilter, mean: f64) -> Result<Self> {
        let factor = spectral_sqrt_factor(&covariance)?;
        Ok(Self { covariance, mean, factor })
    }

    pub fn covariance(&self) -> &PolyFilter {
        &self.covariance
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.factor
    }

    /// Draws `mean + factor * z` with `z` standard normal from `rng`.
    pub fn sample_with_rng(&self, rng: &mut impl Rng) -> Signal {
        sample_gaussian(&self.factor, self.mean, self.covariance.graph().clone(), rng)
    }

    pub fn sample(&self, seed: u64) -> Signal {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with_rng(&mut rng)
    }
}

/// Zero-mean noise with covariance `g(S_1,...,S_d)`.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariance: PolyFilter,
    factor: DenseMatrix,
}

impl NoiseModel {
    pub fn new(covariance: PolyFilter) -> Result<Self> {
        let factor = spectral_sqrt_factor(&covariance)?;
        Ok(Self { covariance, factor })
    }

    pub fn covariance(&self) -> &PolyFilter {
        &self.covariance
    }

    pub fn sample_with_rng(&self, rng: &mut impl Rng) -> Signal {
        sample_gaussian(&self.factor, 0.0, self.covariance.graph().clone(), rng)
    }

    pub fn sample(&self, seed: u64) -> Signal {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        self.sample_with_rng(&mut rng)
    }
}

/// Spectral square root `U diag(sqrt(max(r(lambda), 0))) U^T` of a polynomial
/// covariance. Works for semidefinite covariances (e.g. Laplacian-shaped
/// noise, which annihilates constants); spectrum below `-1e-10` is rejected.
fn spectral_sqrt_factor(covariance: &PolyFilter) -> Result<DenseMatrix> {
    let sd = covariance.spectral()?;
    let n = covariance.dim();
    let mut bad = 0.0f64;
    let gains: Vec<f64> = (0..n)
        .map(|i| {
            let v = covariance.poly().evaluate(sd.lambda(i));
            if v < bad {
                bad = v;
            }
            v.max(0.0).sqrt()
        })
        .collect();
    if bad < -1e-10 {
        return Err(CoreError::PositivityFailure {
            what: "covariance spectrum".into(),
            min: bad,
        });
    }
    let u = sd.basis();
    let mut factor = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += u.get(i, k) * gains[k] * u.get(j, k);
            }
            factor.set(i, j, acc);
        }
    }
    Ok(factor)
}

fn sample_gaussian(
    factor: &DenseMatrix,
    mean: f64,
    graph: std::sync::Arc<crate::graph::Graph>,
    rng: &mut impl Rng,
) -> Signal {
    let n = factor.rows;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut v = factor.matvec(&z);
    if mean != 0.0 {
        for vi in &mut v {
            *vi += mean;
        }
    }
    Signal::new(graph, v).expect("factor dimension matches graph")
}

/// Strip index (1..=4) of a unit-square point, partitioning by
/// `c_x + c_y` into the bands `[0, 0.5) [0.5, 1) [1, 1.5) [1.5, 2]`.
/// Boundaries belong to the higher strip.
pub fn strip_index(cx: f64, cy: f64) -> usize {
    let s = cx + cy;
    if s < 0.5 {
        1
    } else if s < 1.0 {
        2
    } else if s < 1.5 {
        3
    } else {
        4
    }
}

/// Four-strip test signal on a geometric graph: `0.5 - 2 c_x` on the first
/// and third diagonal strips of the unit square, `0.5 + c_x^2 + c_y^2` on
/// the second and fourth.
pub fn four_strip(graph: std::sync::Arc<crate::graph::Graph>, coords: &[(f64, f64)]) -> Result<Signal> {
    if coords.len() != graph.vertex_count() {
        return Err(CoreError::DimensionMismatch {
            expected: graph.vertex_count(),
            got: coords.len(),
        });
    }
    let values = coords
        .iter()
        .map(|&(cx, cy)| match strip_index(cx, cy) {
            1 | 3 => 0.5 - 2.0 * cx,
            _ => 0.5 + cx * cx + cy * cy,
        })
        .collect();
    Signal::new(graph, values)
}
