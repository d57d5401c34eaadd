//! Generalized collision invariants on S^{d-1} and SO(3) and the
//! hydrodynamic coefficients built from them.

mod body;
mod bvp;
mod coefficients;
mod orthogonality;
mod sphere;

pub use body::{solve_gci_body, solve_gci_body_with, GciBodySolution};
pub use bvp::graded_grid;
pub use coefficients::*;
pub use orthogonality::*;
pub use sphere::{solve_gci_sphere, solve_gci_sphere_with, GciSphereSolution};
