//! Equilibrium branches of the homogeneous kinetic equation: roots of the
//! consistency condition, critical densities, stability and decay rates.

pub mod poincare;
pub mod roots;
pub mod stability;

pub use poincare::{mode_gap, mode_spectrum, poincare_constant, poincare_constant_with};
pub use roots::{
    consistency_ratio, consistency_roots, critical_densities, critical_density, phase_diagram, ParityReport,
    PhaseDiagram, RatioCurve,
};
pub use stability::{
    classify_stability, classify_stability_with, decay_rate_anisotropic, decay_rate_isotropic, equilibrium_branches,
    ratio_derivative, EquilibriumBranch, Stability, StabilityReport,
};
