//! Centralized numeric tolerances.
//!
//! Every threshold used by the kernels lives in [`NumericPolicy`]; the
//! defaults below are the values the test and acceptance suites run with.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericPolicy {
    /// |v| = 1 tolerance for unit vectors.
    pub unit_norm_tol: f64,
    /// Frobenius tolerance on R^T R - I and det R - 1.
    pub rotation_tol: f64,
    /// Largest symmetric part accepted by `vee`.
    pub antisym_tol: f64,
    /// Smallest singular value accepted by the polar decomposition.
    pub singular_tol: f64,
    /// Distance from pi below which the SO(3) logarithm refuses.
    pub angle_eps: f64,
    /// Largest relative symmetric part of (d lambda) lambda^T.
    pub tangency_tol: f64,
    /// Largest concentration handled by the VMF kernels.
    pub kappa_max: f64,
    /// Gauss-Legendre nodes for axisymmetric sphere integrals.
    pub polar_nodes: usize,
    /// Trapezoid nodes in azimuth for full-sphere integrals.
    pub azimuth_nodes: usize,
    /// |J| below which the mean direction is treated as undefined.
    pub j_tol: f64,
    /// Floor applied to f before taking logarithms.
    pub f_floor: f64,
    /// |(iota/c1)'| at or below which a root is marginal.
    pub deriv_tol: f64,
    /// Relative local error accepted by the kinetic time stepper.
    pub step_rtol: f64,
    /// Weak residual accepted for the sphere GCI problem.
    pub gci_sphere_tol: f64,
    /// Weak residual accepted for the body GCI problem.
    pub gci_body_tol: f64,
    /// Relative residual accepted for the SOH coefficient fit.
    pub soh_fit_tol: f64,
    /// Relative residual accepted for the SOHB coefficient fit.
    pub sohb_fit_tol: f64,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        unit_norm_tol: 1e-12,
        rotation_tol: 1e-10,
        antisym_tol: 1e-10,
        singular_tol: 1e-8,
        angle_eps: 1e-6,
        tangency_tol: 0.1,
        kappa_max: 200.0,
        polar_nodes: 256,
        azimuth_nodes: 64,
        j_tol: 1e-12,
        f_floor: 1e-14,
        deriv_tol: 1e-8,
        step_rtol: 1e-7,
        gci_sphere_tol: 1e-8,
        gci_body_tol: 1e-7,
        soh_fit_tol: 1e-6,
        sohb_fit_tol: 1e-4,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}
