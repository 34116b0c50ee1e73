//! radialwave-core: a numerical laboratory for the radial focusing wave
//! equation u_tt - Δu = |u|^{p-1} u in odd dimensions.
//!
//! The crate provides
//! - weighted radial grids and fields with the r^{d-1} measure,
//! - a spectral calculus for the radial Laplacian (propagator multipliers,
//!   fractional derivatives, Littlewood-Paley blocks, Sobolev/Besov norms),
//! - the exact free wave flow, Duhamel integrals and exterior-energy windows,
//! - the exterior projection algebra onto the static plane P(R) together with
//!   a channel-of-energy verifier,
//! - a Strang-split nonlinear solver with energy/virial/scattering diagnostics,
//! - stable-manifold shooting for the singular stationary family Z_ℓ,
//! - frequency-envelope and small-tail diagnostics.

pub mod channels;
pub mod envelope;
pub mod error;
pub mod field;
pub mod grid;
pub mod linear_wave;
pub mod model;
pub mod nonlinear;
pub mod ode;
pub mod sampling;
pub mod spectral;
pub mod stationary;
mod tridiag;

pub use error::{Error, Result};
pub use field::{energy_pair_norm, h1_seminorm_sq, weighted_l2, RadialField, StatePair};
pub use grid::RadialGrid;
pub use model::ModelParams;
pub use spectral::{LPProfile, SpectralBasis};
