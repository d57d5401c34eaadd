use super::bvp::{integrate_on, solve_extrapolated, weak_forms, SturmLiouville};
use super::sphere::h_from;
use crate::error::Result;
use crate::policy::NumericPolicy;
use crate::spline::NaturalSpline;
use crate::vmf::check_kappa;

/// Problem for p = sin(theta) h:
/// -(sin^2(t/2) m p')' + 1/2 m p = -sin^2(t/2) sin(t) m, with m scaled by Z e^{-3k/2}.
pub(crate) struct BodyProblem {
    pub kappa: f64,
}

impl BodyProblem {
    fn m(&self, t: f64) -> f64 {
        (self.kappa * (t.cos() - 1.0)).exp()
    }
}

impl SturmLiouville for BodyProblem {
    fn a(&self, t: f64) -> f64 {
        (0.5 * t).sin().powi(2) * self.m(t)
    }
    fn b(&self, t: f64) -> f64 {
        0.5 * self.m(t)
    }
    fn f(&self, t: f64) -> f64 {
        -(0.5 * t).sin().powi(2) * t.sin() * self.m(t)
    }
}

/// Solution of the body GCI problem in the unknown p = sin(theta) h.
#[derive(Debug, Clone)]
pub struct GciBodySolution {
    pub kappa: f64,
    pub theta_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub h: Vec<f64>,
    pub weak_residual: f64,
    pub convergence_ratio: f64,
    spline: NaturalSpline,
}

impl GciBodySolution {
    /// (p, p') at theta.
    pub fn p_at(&self, theta: f64) -> (f64, f64) {
        let (v, d, _) = self.spline.eval_all(theta);
        (v, d)
    }

    pub fn h_at(&self, theta: f64) -> f64 {
        h_from(&self.spline, theta)
    }

    /// (||p||_{L2}, ||sin(theta/2) p'||_{L2}) on (0, pi).
    pub fn membership_norms(&self) -> (f64, f64) {
        let a = integrate_on(&self.theta_grid, |t| self.p_at(t).0.powi(2)).sqrt();
        let b = integrate_on(&self.theta_grid, |t| ((0.5 * t).sin() * self.p_at(t).1).powi(2)).sqrt();
        (a, b)
    }

    pub fn variational_defect(&self, coeffs: &[f64]) -> f64 {
        let p = BodyProblem { kappa: self.kappa };
        let modes: Vec<f64> = (1..=coeffs.len()).map(|j| j as f64).collect();
        let (bil, lin) = weak_forms(&p, |t| self.p_at(t), &self.theta_grid, &modes);
        coeffs.iter().zip(bil.iter().zip(&lin)).map(|(c, (b, l))| c * (b - l)).sum()
    }
}

pub fn solve_gci_body(kappa: f64, n: usize) -> Result<GciBodySolution> {
    solve_gci_body_with(kappa, n, &NumericPolicy::DEFAULT)
}

/// p vanishes at both ends: at theta = 0 by regularity, at theta = pi because
/// rotations by pi about n and -n coincide.
pub fn solve_gci_body_with(kappa: f64, n: usize, policy: &NumericPolicy) -> Result<GciBodySolution> {
    check_kappa(kappa, policy)?;
    let s = solve_extrapolated(&BodyProblem { kappa }, n)?;
    let h = s.theta.iter().map(|&t| h_from(&s.spline, t)).collect();
    Ok(GciBodySolution {
        kappa,
        theta_grid: s.theta,
        p: s.values,
        h,
        weak_residual: s.weak_residual,
        convergence_ratio: s.convergence_ratio,
        spline: s.spline,
    })
}
