//! Numerical laboratory for ground states of the mass-critical focusing
//! Schrödinger equation with a spatially decaying nonlinearity
//!
//! ```text
//! -Δu + V(x) u - a |x|^{-b} u^{1+2β²} = μ u   in ℝᴺ,   β² = (2-b)/N,
//! ```
//!
//! studied through the constrained minimization of the associated energy on
//! the unit-mass sphere. The crate computes the limit profile `Q` and the
//! existence threshold `a* = ‖Q‖₂^{2β²}` by shooting, runs normalized
//! gradient-flow minimizations with warm-started continuation in `a`, fits
//! the blow-up scaling laws as `a ↗ a*`, and verifies the ground-state
//! identities, the local virial balance, and the radial non-degeneracy of
//! the linearized operator at desk scale.
//!
//! All numerics are generic over the scalar type ([`scalar::Scalar`], i.e.
//! `f32` or `f64`); the concrete `f64` aliases below are what the binaries
//! and the verification suite use.

pub mod acceptance;
pub mod asymptotics;
pub mod cache;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod minimize;
pub mod params;
pub mod qsolve;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the main domain types.
pub type RadialGrid64 = grid::RadialGrid<f64>;
pub type Profile64 = grid::Profile<f64>;
pub type Params64 = params::Params<f64>;
pub type PotentialSpec64 = params::PotentialSpec<f64>;
pub type QSolution64 = qsolve::QSolution<f64>;
pub type MinimizeResult64 = minimize::MinimizeResult<f64>;
pub type FlowConfig64 = minimize::FlowConfig<f64>;
pub type SolveOptions64 = qsolve::SolveOptions<f64>;
pub type FitReport64 = asymptotics::FitReport<f64>;
