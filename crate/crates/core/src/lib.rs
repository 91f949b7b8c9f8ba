//! Pseudo-spectral laboratory for the symplectic Euler equations on periodic
//! boxes: spectral operators, the symplectic operator calculus, Eulerian and
//! Lagrangian (geodesic) solvers, and scripted numerical experiments.

pub mod error;
pub mod experiments;
pub mod eulerian;
pub(crate) mod fft;
pub mod field;
pub mod grid;
pub mod interp;
pub mod lagrangian;
pub mod random;
pub mod snapshot;
pub mod spectral;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ScalarField, SkewMatrixField, SkewSpectrum, Spectrum, VectorField, VectorSpectrum};
pub use grid::{Grid, GridSpec};
pub use spectral::Norms;
