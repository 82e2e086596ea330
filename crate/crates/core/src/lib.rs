//! Spectral vanishing viscosity (SVV) approximation of periodic fractional
//! conservation laws
//!
//! ```text
//! ∂ₜu + ∂ₓ f(u) = L^μ[u],   x ∈ (0, 2π) periodic,
//! ```
//!
//! where `L^μ` is a Lévy operator (fractional Laplacian, CGMY, or a general
//! tempered density). The non-local term is diagonal in Fourier space, so
//! the semi-discrete Fourier–Galerkin system is a set of coupled ODEs for
//! the coefficients `û_ξ`, advanced with classical RK4.
//!
//! Modules, bottom-up:
//! - [`fourier`]: trigonometric polynomials, projection, the Galerkin product.
//! - [`levy`]: Lévy symbols `G^μ(ξ)`, closed form and quadrature.
//! - [`svv`]: SVV parameters and the viscosity term.
//! - [`integrator`]: right-hand side, RK4, time loop.
//! - [`diagnostics`]: norms, energy, truncation error, rate fits, Gibbs checks.
//! - [`config`] and [`experiments`]: run configuration, presets and output files.

pub mod config;
pub mod diagnostics;
pub mod experiments;
pub mod fourier;
pub mod integrator;
pub mod levy;
pub mod quadrature;
pub mod svv;

pub use fourier::SpectralState;
pub use levy::{LevyMeasureSpec, LevySymbol, Normalization};
pub use svv::{SvvParams, ViscosityMode};
