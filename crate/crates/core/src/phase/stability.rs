//! Stability of consistency roots and the associated decay rates.

use serde::{Deserialize, Serialize};

use super::poincare::poincare_constant;
use super::roots::{consistency_ratio_with, critical_density_with, RatioCurve};
use crate::error::{invalid, Error, Result};
use crate::kinetic::CouplingLaw;
use crate::policy::NumericPolicy;
use crate::vmf::order_parameter_c1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub kappa: f64,
    pub rho: f64,
    /// (iota / c1)'(kappa).
    pub derivative: f64,
    pub classification: Stability,
    /// Relaxation rate toward the VMF family (stable roots, d = 3).
    pub lambda_aniso: Option<f64>,
    /// Weighted Poincare constant at kappa (stable roots, d = 3).
    pub lambda_kappa: Option<f64>,
}

/// (iota / c1)'(kappa) by centered differences with h = 1e-4 (1 + kappa),
/// Richardson-improved.
pub fn ratio_derivative(kappa: f64, law: &CouplingLaw, d: usize, policy: &NumericPolicy) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(invalid(format!("stability needs a positive root, got {kappa}")));
    }
    let h = (1e-4 * (1.0 + kappa)).min(0.25 * kappa);
    let r = |k: f64| consistency_ratio_with(k, law, d, policy);
    let c = |h: f64| -> Result<f64> { Ok((r(kappa + h)? - r(kappa - h)?) / (2.0 * h)) };
    Ok((4.0 * c(0.5 * h)? - c(h)?) / 3.0)
}

/// Classifies a positive root by the sign of (iota / c1)'; marginal roots
/// are an error.
pub fn classify_stability(kappa: f64, law: &CouplingLaw, d: usize) -> Result<StabilityReport> {
    classify_stability_with(kappa, law, d, &NumericPolicy::DEFAULT)
}

pub fn classify_stability_with(
    kappa: f64,
    law: &CouplingLaw,
    d: usize,
    policy: &NumericPolicy,
) -> Result<StabilityReport> {
    let derivative = ratio_derivative(kappa, law, d, policy)?;
    let rho = consistency_ratio_with(kappa, law, d, policy)?;
    if derivative.abs() <= policy.deriv_tol {
        return Err(Error::MarginalCase { kappa, derivative });
    }
    if derivative < 0.0 {
        return Ok(StabilityReport {
            kappa,
            rho,
            derivative,
            classification: Stability::Unstable,
            lambda_aniso: None,
            lambda_kappa: None,
        });
    }
    let (lambda_aniso, lambda_kappa) = if d == 3 {
        let lk = poincare_constant(kappa)?;
        (Some(assemble_lambda(kappa, law, d, derivative, lk)?), Some(lk))
    } else {
        (None, None)
    };
    Ok(StabilityReport { kappa, rho, derivative, classification: Stability::Stable, lambda_aniso, lambda_kappa })
}

fn assemble_lambda(kappa: f64, law: &CouplingLaw, d: usize, derivative: f64, lambda_kappa: f64) -> Result<f64> {
    let c1 = order_parameter_c1(kappa, d)?;
    let iota = law.iota(kappa);
    Ok(c1 * law.tau(iota) / law.iota_derivative(kappa) * lambda_kappa * derivative)
}

/// lambda = c1 tau(iota) / iota' * Lambda_kappa * (iota / c1)' at a stable root.
pub fn decay_rate_anisotropic(kappa: f64, law: &CouplingLaw, d: usize) -> Result<f64> {
    if d != 3 {
        return Err(invalid("the anisotropic rate uses the S^2 Poincare constant; d must be 3"));
    }
    let policy = NumericPolicy::DEFAULT;
    let derivative = ratio_derivative(kappa, law, d, &policy)?;
    if derivative <= policy.deriv_tol {
        return Err(Error::WrongRegime(format!("root kappa = {kappa} is not stable: (iota/c1)' = {derivative:.3e}")));
    }
    assemble_lambda(kappa, law, d, derivative, poincare_constant(kappa)?)
}

/// lambda = (d - 1) tau(0) (1 - rho / rho_c) for rho < rho_c.
pub fn decay_rate_isotropic(rho: f64, law: &CouplingLaw, d: usize) -> Result<f64> {
    let rho_c = critical_density_with(law, d, &NumericPolicy::DEFAULT)?;
    if !(rho > 0.0) {
        return Err(invalid(format!("density must be > 0, got {rho}")));
    }
    match rho_c {
        Some(rc) if rho >= rc => Err(Error::WrongRegime(format!("rho = {rho} is not below rho_c = {rc}"))),
        Some(rc) => Ok((d - 1) as f64 * law.tau(0.0) * (1.0 - rho / rc)),
        None => Ok((d - 1) as f64 * law.tau(0.0)),
    }
}

/// Roots and their classification on a density grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumBranch {
    pub law_id: String,
    pub d: usize,
    pub rho_grid: Vec<f64>,
    /// Positive roots per density.
    pub roots_per_rho: Vec<Vec<f64>>,
    pub stability: Vec<Vec<Stability>>,
    /// Decay rate toward each root's family: isotropic rate below rho_c is
    /// not listed here; stable anisotropic roots carry lambda (d = 3).
    pub lambda: Vec<Vec<Option<f64>>>,
    /// Weighted Poincare constant Lambda_kappa at each stable root (d = 3).
    pub lambda_kappa: Vec<Vec<Option<f64>>>,
    /// Marginal roots met on the grid.
    pub marginal_count: usize,
}

pub fn equilibrium_branches(
    curve: &RatioCurve,
    law: &CouplingLaw,
    d: usize,
    rho_grid: &[f64],
) -> Result<EquilibriumBranch> {
    let mut roots_per_rho = Vec::new();
    let mut stability = Vec::new();
    let mut lambda = Vec::new();
    let mut lambda_kappa = Vec::new();
    let mut marginal_count = 0;
    for &rho in rho_grid {
        let roots: Vec<f64> = curve.roots(rho)?.into_iter().skip(1).collect();
        let mut st = Vec::new();
        let mut la = Vec::new();
        let mut lk = Vec::new();
        for &k in &roots {
            match classify_stability(k, law, d) {
                Ok(rep) => {
                    st.push(rep.classification);
                    la.push(rep.lambda_aniso);
                    lk.push(rep.lambda_kappa);
                }
                Err(Error::MarginalCase { .. }) => {
                    marginal_count += 1;
                    st.push(Stability::Marginal);
                    la.push(None);
                    lk.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        roots_per_rho.push(roots);
        stability.push(st);
        lambda.push(la);
        lambda_kappa.push(lk);
    }
    Ok(EquilibriumBranch {
        law_id: law.id().to_string(),
        d,
        rho_grid: rho_grid.to_vec(),
        roots_per_rho,
        stability,
        lambda,
        lambda_kappa,
        marginal_count,
    })
}
