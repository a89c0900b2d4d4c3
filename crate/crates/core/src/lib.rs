//! Plane-wave diffraction by Dirichlet obstacles on a 2D square lattice.
//!
//! The library solves the discrete Helmholtz equation with the 5-point
//! Laplacian, builds the free-space lattice Green's function by contour
//! quadrature, assembles and solves boundary algebraic equations for
//! arbitrary finite obstacles, and evaluates far-field directivities.
//! On top of the direct solver it provides embedding formulae: the
//! directivity for every incidence angle is reconstructed from a finite
//! set of auxiliary plane-wave solutions, and the number of auxiliary
//! solutions can be recovered from directivity data by an SVD rank probe.

pub mod bae;
pub mod canonical;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod green;
pub mod grid;
pub mod lattice;

pub use error::{Error, Result};
pub use lattice::{Direction, Site, WaveRoots, Wavenumber};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;
