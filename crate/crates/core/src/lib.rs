//! Matrix stability analysis of singlerate and multirate BDFk/EXTm
//! predictor-corrector schemes for the 1D heat equation on two
//! overlapping grids.
//!
//! The growth matrix `G` maps the stacked subdomain history at one
//! timestep to the next; a scheme is stable at a given nondimensional
//! timestep `s = nu dt / dx^2` when its spectral radius is below one.

pub mod coeffs;
pub mod discretize;
pub mod error;
pub mod layout;
pub mod matrix;
pub mod multirate;
pub mod simulate;
pub mod singlerate;
pub mod spectral;
pub mod sweep;

pub use coeffs::SchemeSpec;
pub use discretize::{GridSpec, Subdomain};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use multirate::{growth_matrix_multirate, MultirateSpec};
pub use singlerate::{growth_matrix_singlerate, GrowthMatrix, Timestep};
pub use spectral::{spectral_radius, StabilityPoint};
pub use sweep::{SweepCase, SweepRow, SweepSpec};
