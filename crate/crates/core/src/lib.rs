//! Numerical laboratory for the open, periodic and externally forced Toda
//! chains.
//!
//! The crate integrates the chain flows, maps phase points to spectral and
//! scattering coordinates, builds wave operators and Lax pairs, and provides
//! action-angle coordinates for the forced chain with `c > 0`.
//!
//! Positions and momenta are stored 0-based in Rust slices; everything that
//! leaves the process (CSV headers, CLI output) is labelled 1-based.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actionangle;
pub mod elliptic;
pub mod error;
pub mod experiment;
pub mod integrator;
pub mod lattice;
pub mod laxpair;
pub mod scattering;
pub mod spectral;

pub use error::{Result, TodaError};
pub use integrator::{IntegrationPlan, Trajectory};
pub use lattice::{Boundary, FlaschkaVars, LatticeState, System};
pub use spectral::{JacobiMatrix, SpectralData};
