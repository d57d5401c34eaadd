use std::f64::consts::PI;

use super::bvp::{integrate_on, solve_extrapolated, weak_forms, SturmLiouville};
use crate::error::{invalid, Result};
use crate::policy::NumericPolicy;
use crate::spline::NaturalSpline;
use crate::vmf::check_kappa;

/// -(sin^{d-2} e^{k cos} g')' + (d-2) sin^{d-4} e^{k cos} g = sin^{d-1} e^{k cos},
/// scaled by e^{-k} to keep the weights bounded.
pub(crate) struct SphereProblem {
    pub kappa: f64,
    pub d: usize,
}

impl SphereProblem {
    fn weight(&self, t: f64) -> f64 {
        (self.kappa * (t.cos() - 1.0)).exp()
    }
}

impl SturmLiouville for SphereProblem {
    fn a(&self, t: f64) -> f64 {
        t.sin().powi(self.d as i32 - 2) * self.weight(t)
    }
    fn b(&self, t: f64) -> f64 {
        if self.d == 2 {
            return 0.0;
        }
        (self.d - 2) as f64 * t.sin().powi(self.d as i32 - 4) * self.weight(t)
    }
    fn f(&self, t: f64) -> f64 {
        t.sin().powi(self.d as i32 - 1) * self.weight(t)
    }
}

/// Solution g of the sphere GCI problem and h = g / sin(theta).
#[derive(Debug, Clone)]
pub struct GciSphereSolution {
    pub kappa: f64,
    pub d: usize,
    pub theta_grid: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub weak_residual: f64,
    /// Error ratio of the base P1 scheme under grid doubling (about 4).
    pub convergence_ratio: f64,
    spline: NaturalSpline,
}

impl GciSphereSolution {
    /// (g, g') at theta.
    pub fn g_at(&self, theta: f64) -> (f64, f64) {
        let (v, d, _) = self.spline.eval_all(theta);
        (v, d)
    }

    /// h = g / sin(theta), continued to the endpoints.
    pub fn h_at(&self, theta: f64) -> f64 {
        h_from(&self.spline, theta)
    }

    /// Residual of the weak form against sum_j c_j sin(j theta).
    pub fn variational_defect(&self, coeffs: &[f64]) -> f64 {
        let p = SphereProblem { kappa: self.kappa, d: self.d };
        let modes: Vec<f64> = (1..=coeffs.len()).map(|j| j as f64).collect();
        let (bil, lin) = weak_forms(&p, |t| self.g_at(t), &self.theta_grid, &modes);
        // undo the e^{-kappa} scaling of the weights
        let scale = self.kappa.exp();
        coeffs.iter().zip(bil.iter().zip(&lin)).map(|(c, (b, l))| c * (b - l)).sum::<f64>() * scale
    }

    /// Weighted L2 norm (sin^{d-2} e^{k (cos - 1)}) of the solution.
    pub fn weighted_norm(&self, q: impl Fn(f64) -> f64) -> f64 {
        let p = SphereProblem { kappa: self.kappa, d: self.d };
        integrate_on(&self.theta_grid, |t| p.a(t) * q(t).powi(2)).sqrt()
    }
}

pub(crate) fn h_from(spline: &NaturalSpline, theta: f64) -> f64 {
    let (v, d, _) = spline.eval_all(theta);
    if theta < 1e-7 {
        d
    } else if PI - theta < 1e-7 {
        -d
    } else {
        v / theta.sin()
    }
}

pub fn solve_gci_sphere(kappa: f64, d: usize, n: usize) -> Result<GciSphereSolution> {
    solve_gci_sphere_with(kappa, d, n, &NumericPolicy::DEFAULT)
}

pub fn solve_gci_sphere_with(kappa: f64, d: usize, n: usize, policy: &NumericPolicy) -> Result<GciSphereSolution> {
    check_kappa(kappa, policy)?;
    if d < 2 {
        return Err(invalid("sphere dimension must be >= 2"));
    }
    let s = solve_extrapolated(&SphereProblem { kappa, d }, n)?;
    let h = s.theta.iter().map(|&t| h_from(&s.spline, t)).collect();
    Ok(GciSphereSolution {
        kappa,
        d,
        theta_grid: s.theta,
        g: s.values,
        h,
        weak_residual: s.weak_residual,
        convergence_ratio: s.convergence_ratio,
        spline: s.spline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn residual_and_convergence_at_kappa_one() {
        let s = solve_gci_sphere(1.0, 3, 1024).unwrap();
        assert!(s.weak_residual < 1e-8, "{}", s.weak_residual);
        assert!((s.convergence_ratio - 4.0).abs() < 0.6, "{}", s.convergence_ratio);
        assert_eq!(s.g[0], s.g[0] * 0.0);
        assert!(s.g[0].abs() < 1e-15 && s.g.last().unwrap().abs() < 1e-15);
    }

    #[test]
    fn residual_drops_under_refinement() {
        let r: Vec<f64> = [256, 512].iter().map(|&n| solve_gci_sphere(1.0, 3, n).unwrap().weak_residual).collect();
        assert!(r[1] < r[0] / 4.0);
    }

    #[test]
    fn satisfies_variational_identity() {
        let s = solve_gci_sphere(1.0, 3, 1024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let c: Vec<f64> = (0..8).map(|j| rng.random_range(-1.0..1.0) / (1.0 + j as f64)).collect();
            assert!(s.variational_defect(&c).abs() < 1e-7);
        }
    }

    #[test]
    fn endpoint_values_shrink_with_refinement() {
        for n in [128, 512] {
            let s = solve_gci_sphere(2.0, 3, n).unwrap();
            let (g0, _) = s.g_at(1e-6);
            let (gp, _) = s.g_at(PI - 1e-6);
            assert!(g0.abs() < 1e-5 && gp.abs() < 1e-5);
        }
    }

    #[test]
    fn positive_solution_in_several_dimensions() {
        for d in [2, 3, 4, 5] {
            let s = solve_gci_sphere(1.5, d, 256).unwrap();
            assert!(s.g[1..s.g.len() - 1].iter().all(|&g| g > 0.0), "d = {d}");
            assert!(s.h.iter().all(|h| h.is_finite()));
        }
    }
}
