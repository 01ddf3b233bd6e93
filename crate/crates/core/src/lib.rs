//! Graph signal processing over commutative graph shifts.
//!
//! The crate provides:
//!
//! * graph construction (circulant, random geometric) and shift matrices
//!   (adjacency, Laplacian, normalized Laplacian) with joint-spectrum
//!   computation for commuting symmetric shifts,
//! * multivariate polynomial filters evaluated by sparse shift recurrences,
//! * Jacobi-series and Chebyshev-interpolation approximations of reciprocal
//!   polynomials, driving an exponentially convergent quasi-Newton inverse
//!   filtering iteration,
//! * stochastic / wide-band / worst-case Wiener reconstruction filters with
//!   their error functionals and a Neumann regularization iteration,
//! * a round-synchronous vertex-agent simulator that executes every pipeline
//!   with one-hop communication only and certifies agreement with the
//!   centralized implementations.

pub mod dense;
pub mod distsim;
pub mod error;
pub mod filter;
pub mod graph;
pub mod inverse;
pub mod jacobi;
pub mod models;
pub mod poly;
pub mod shift;
pub mod signal;
pub mod spectral;
pub mod wiener;

pub use dense::DenseMatrix;
pub use filter::{GraphOperator, MatvecCount, PolyFilter};
pub use error::CoreError;
pub use graph::Graph;
pub use inverse::{ApproxFamily, ApproxSpec, IterTrace, SolveOptions};
pub use models::{NoiseModel, StationaryModel};
pub use shift::Shift;
pub use signal::Signal;
pub use spectral::SpectralData;
pub use wiener::{Probability, WienerProblem, WienerResult};
