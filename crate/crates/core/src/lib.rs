//! Laplace–Beltrami spectra of closed boundaries, fractional Gaussian fields,
//! Sobolev multipliers, impedance operators and dissipative acoustic pencils.

pub mod acoustic;
pub mod error;
pub mod fgf;
pub mod function;
pub mod geometry;
pub mod impedance;
pub mod lanczos;
pub mod linalg;
pub mod multiplier;
mod par;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
pub use faer::c64;
pub use function::SpectralFunction;
pub use geometry::BoundaryGeometry;
pub use spectrum::BoundarySpectrum;
