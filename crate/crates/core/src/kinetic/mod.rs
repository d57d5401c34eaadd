//! Spatially homogeneous kinetic equation with |j|-dependent coefficients.

pub mod decay;
pub mod law;
pub mod solver;
pub mod state;

pub use decay::{distances_to_limit, family_member, fit_decay_window, kappa_from_c1, measure_decay_rate, DecayFit};
pub use law::{CouplingLaw, LawSpec, ScalarFn};
pub use solver::{
    collision_rhs, collision_rhs_with, free_energy_and_dissipation, free_energy_and_dissipation_with, free_energy_rate,
    free_energy_rate_with, integrate, integrate_with, step, step_with, DiagnosticsSeries, KineticEvents,
    KineticOptions, StepOutcome, Trajectory,
};
pub use state::{KineticState, Representation};
