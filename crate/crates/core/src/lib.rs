//! Spectral laboratory for the L² energy decay of two compressible
//! approximations to the Navier-Stokes equations.
//!
//! * [`spectral`]: periodic-box Fourier representation, transforms, norms.
//! * [`symbol`]: the linear operator `Δu + (1/ε)∇div u` per wavevector and its
//!   exact semigroup.
//! * [`decay`]: decay indicator, decay character estimation, data synthesis.
//! * [`radial`]: continuum evaluation of `‖e^{tL}u₀‖²` for radial spectra.
//! * [`dynamics`]: integrating-factor time stepping of the Temam and
//!   Lelièvre systems with energy monitoring.
//! * [`harness`]: predicted exponents, power-law fits, experiments, reports.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what the harness and the
//! command line use.

// `!(x > y)` is how NaN inputs get rejected throughout; component loops
// over `0..3` read better than zipped iterators in the vector algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decay;
pub mod dynamics;
mod error;
pub mod fit;
pub mod harness;
pub mod io;
pub mod quadrature;
pub mod radial;
mod scalar;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = spectral::GridSpec<f64>;
pub type Field = spectral::SpectralField<f64>;
pub type Physical = spectral::PhysicalField<f64>;
pub type Params = dynamics::SystemParams<f64>;
pub type Trace = dynamics::EnergyTrace<f64>;
pub type Profile = radial::RadialProfile<f64>;
pub type Estimate = decay::DecayCharacterEstimate<f64>;
pub type DataSpec = decay::InitialDataSpec<f64>;
pub type Fit = fit::DecayFit<f64>;
