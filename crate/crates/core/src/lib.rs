//! Numerical kernels for alignment-driven collective dynamics: manifold
//! geometry on spheres and SO(3), von Mises-Fisher equilibria, generalized
//! collision invariants and hydrodynamic coefficients, particle simulations,
//! the spatially homogeneous kinetic equation and its phase structure.

pub mod error;
pub mod gci;
pub mod geometry;
pub mod kinetic;
pub mod particles;
pub mod phase;
pub mod policy;
pub mod quadrature;
pub mod spline;
pub mod vmf;

pub use error::{Error, Result};
pub use geometry::{AxialVector, RotationMatrix, UnitVector};
pub use policy::NumericPolicy;
