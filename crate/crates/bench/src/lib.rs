//! Fixed workloads shared by the benchmarks in `benches/`.

use sohkit::kinetic::{CouplingLaw, KineticState, Representation};
use sohkit::particles::{InitialCondition, SimConfig};
use sohkit::Result;

/// Particle run at unit density with a local interaction radius.
pub fn particle_config(n: usize, d: usize) -> SimConfig {
    let l = (n as f64).powf(1.0 / d as f64);
    SimConfig { n, l, r: 1.0, nu: 1.0, tau: 0.1, dt: 0.01, d, seed: 7, initial: InitialCondition::Uniform }
}

/// A VMF state with kappa = 2 in the spectral representation for d.
pub fn kinetic_state(d: usize, modes: usize, rho: f64) -> Result<KineticState> {
    KineticState::vmf(Representation::for_dim(d)?, modes, rho, 2.0, 0.0)
}

pub fn tuned_law(d: usize) -> Result<CouplingLaw> {
    CouplingLaw::tuned(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_are_valid() {
        for d in [2, 3] {
            particle_config(1000, d).validate().unwrap();
            let f = kinetic_state(d, 32, 1.0).unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-12);
        }
        tuned_law(3).unwrap();
    }
}
