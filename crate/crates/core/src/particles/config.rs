use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Initial orientations of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum InitialCondition {
    /// Independent uniform orientations.
    #[default]
    Uniform,
    /// Every particle starts at the reference orientation (e_1, or the identity).
    Aligned,
    /// Independent samples of the VMF law around the reference orientation.
    Vmf { kappa: f64 },
}

/// Parameters of a particle simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    /// Box side.
    pub l: f64,
    /// Interaction radius.
    pub r: f64,
    pub nu: f64,
    pub tau: f64,
    pub dt: f64,
    /// 2 or 3 for the Vicsek model; the body model requires 3.
    pub d: usize,
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialCondition,
}

/// How neighbor sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interaction {
    /// Ball of radius R with minimum image (R < L/2).
    Local,
    /// Every pair interacts (R covers the whole periodic box).
    AllToAll,
}

impl SimConfig {
    /// Checks the invariants and returns the interaction mode.
    ///
    /// Radii in [L/2, L sqrt(d)/2) are rejected: minimum-image balls are not
    /// well defined there, and beyond L sqrt(d)/2 every pair is in range.
    pub fn validate(&self) -> Result<Interaction> {
        if self.n == 0 {
            return Err(invalid("particle count must be positive"));
        }
        if self.d != 2 && self.d != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {}", self.d)));
        }
        for (name, v) in [("L", self.l), ("R", self.r), ("dt", self.dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        for (name, v) in [("nu", self.nu), ("tau", self.tau)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be non-negative and finite")));
            }
        }
        if self.dt * self.nu >= 0.5 || self.dt * self.tau >= 0.5 {
            return Err(invalid("time step too large: need dt*nu < 0.5 and dt*tau < 0.5"));
        }
        if let InitialCondition::Vmf { kappa } = self.initial {
            if !(kappa >= 0.0) || !kappa.is_finite() {
                return Err(invalid("initial concentration must be finite and >= 0"));
            }
        }
        let all = 0.5 * self.l * (self.d as f64).sqrt();
        if self.r < 0.5 * self.l {
            Ok(Interaction::Local)
        } else if self.r >= all {
            Ok(Interaction::AllToAll)
        } else {
            Err(invalid(format!("radius {} must be < L/2 = {} or >= L*sqrt(d)/2 = {all}", self.r, 0.5 * self.l)))
        }
    }
}
