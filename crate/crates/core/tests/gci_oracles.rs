//! Independent checks of the collision-invariant solvers and coefficient fits.

use sohkit::gci::{
    body_h_moment, extract_soh_coefficients, extract_soh_coefficients_with, extract_sohb_coefficients,
    extract_sohb_coefficients_with, graded_grid, solve_gci_body, solve_gci_sphere, sphere_h_moment,
    ExtractionResolution,
};
use sohkit::NumericPolicy;

/// Second-order finite differences on the graded grid in conservative form.
fn fd_sphere(kappa: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let t = graded_grid(n);
    let a = |x: f64| x.sin() * (kappa * (x.cos() - 1.0)).exp();
    let b = |x: f64| (kappa * (x.cos() - 1.0)).exp() / x.sin();
    let f = |x: f64| x.sin().powi(2) * (kappa * (x.cos() - 1.0)).exp();
    let m = n - 1;
    let mut sub = vec![0.0; m];
    let mut dia = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let i = k + 1;
        let (hl, hr) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let al = a(0.5 * (t[i] + t[i - 1])) / hl;
        let ar = a(0.5 * (t[i] + t[i + 1])) / hr;
        let w = 0.5 * (hl + hr);
        sub[k] = -al;
        sup[k] = -ar;
        dia[k] = al + ar + w * b(t[i]);
        rhs[k] = w * f(t[i]);
    }
    // Thomas
    for k in 1..m {
        let r = sub[k] / dia[k - 1];
        dia[k] -= r * sup[k - 1];
        rhs[k] -= r * rhs[k - 1];
    }
    let mut g = vec![0.0; n + 1];
    g[m] = rhs[m - 1] / dia[m - 1];
    for k in (0..m - 1).rev() {
        g[k + 1] = (rhs[k] - sup[k] * g[k + 2]) / dia[k];
    }
    (t, g)
}

#[test]
fn finite_differences_agree_with_elements() {
    for kappa in [0.5, 2.0, 8.0] {
        let sol = solve_gci_sphere(kappa, 3, 1024).unwrap();
        let (t, g) = fd_sphere(kappa, 8192);
        // weighted L2 difference, weight sin(theta) e^{kappa (cos - 1)}
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..t.len() - 1 {
            let w = 0.5 * (t[i + 1] - t[i - 1]) * t[i].sin() * (kappa * (t[i].cos() - 1.0)).exp();
            let (ge, _) = sol.g_at(t[i]);
            num += w * (ge - g[i]).powi(2);
            den += w * g[i].powi(2);
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-6, "kappa {kappa}: {rel:.3e}");
    }
}

#[test]
fn soh_c2_matches_moment_formula() {
    for kappa in [1.0, 4.0, 10.0] {
        let c = extract_soh_coefficients(kappa, 3).unwrap();
        let sol = solve_gci_sphere(kappa, 3, 1024).unwrap();
        let s2 = sphere_h_moment(&sol, 512, |t| t.sin().powi(2));
        let s2c = sphere_h_moment(&sol, 512, |t| t.sin().powi(2) * t.cos());
        assert!((c.c2 - s2c / s2).abs() < 1e-6, "kappa {kappa}: {} vs {}", c.c2, s2c / s2);
        assert!((c.pressure - 1.0 / kappa).abs() < 1e-6);
    }
}

#[test]
fn sohb_coefficients_match_moment_formulas() {
    for kappa in [1.0, 3.0] {
        let c = extract_sohb_coefficients(kappa).unwrap();
        let sol = solve_gci_body(kappa, 1024).unwrap();
        let s2 = body_h_moment(&sol, 512, |t| t.sin().powi(2)).unwrap();
        let s2c = body_h_moment(&sol, 512, |t| t.sin().powi(2) * t.cos()).unwrap();
        let s2m = body_h_moment(&sol, 512, |t| t.sin().powi(2) * (1.0 - t.cos())).unwrap();
        let c2 = (s2c + 0.4 * s2m) / s2;
        let c4 = 0.2 * s2m / s2;
        assert!((c.c2 - c2).abs() < 1e-4 * c2.abs().max(1.0));
        assert!((c.c3.unwrap() - 1.0 / kappa).abs() < 1e-4);
        assert!((c.c4.unwrap() - c4).abs() < 1e-4);
    }
}

#[test]
fn extractions_are_stable_under_refinement() {
    let p = NumericPolicy::DEFAULT;
    let r = ExtractionResolution::default();
    let a = extract_soh_coefficients_with(10.0, 3, r, &p).unwrap();
    let b = extract_soh_coefficients_with(10.0, 3, r.doubled(), &p).unwrap();
    assert!((a.c2 - b.c2).abs() < 1e-6);
    let a = extract_sohb_coefficients_with(2.0, r, &p).unwrap();
    let b = extract_sohb_coefficients_with(2.0, r.doubled(), &p).unwrap();
    for (x, y) in [(a.c2, b.c2), (a.c3.unwrap(), b.c3.unwrap()), (a.c4.unwrap(), b.c4.unwrap())] {
        assert!((x - y).abs() < 1e-4 * x.abs().max(1e-2), "{x} vs {y}");
    }
}
