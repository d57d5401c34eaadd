//! Best constant of the VMF-weighted Poincare inequality on S^2,
//! <|grad g|^2>_M >= Lambda_kappa <(g - <g>_M)^2>_M.
//!
//! The weight is axisymmetric, so g = G(x) cos(m phi) decouples by azimuthal
//! mode m. Writing G = exp(-kappa x / 2) H turns each mode into the
//! unweighted pencil
//!   A = int (1 - x^2)(H' - kappa H / 2)^2 + m^2 H^2 / (1 - x^2) dx,
//!   B = int H^2 dx,
//! discretized with H_n = (1 - x^2)^{m/2} P_n(x); every integrand is then a
//! polynomial, integrated exactly by Gauss-Legendre.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::kinetic::state::legendre_table;
use crate::quadrature::gauss_legendre;

/// Modes searched for the minimum.
pub const POINCARE_MODES: [usize; 3] = [0, 1, 2];

/// Default basis size for concentration kappa.
pub fn default_basis(kappa: f64) -> usize {
    (40.0 + 2.0 * kappa).min(200.0) as usize
}

/// Eigenvalues of the mode-m pencil in ascending order.
pub fn mode_spectrum(kappa: f64, m: usize, basis: usize) -> Result<Vec<f64>> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("concentration must be finite and >= 0, got {kappa}")));
    }
    if basis < 4 {
        return Err(invalid("Poincare basis needs at least 4 functions"));
    }
    let (x, w) = gauss_legendre(basis + m + 4);
    let mut a = DMatrix::<f64>::zeros(basis, basis);
    let mut b = DMatrix::<f64>::zeros(basis, basis);
    let (mut p, mut dp) = (vec![0.0; basis], vec![0.0; basis]);
    let mf = m as f64;
    let mut h = vec![0.0; basis];
    let mut g = vec![0.0; basis];
    for (&xi, &wi) in x.iter().zip(&w) {
        legendre_table(basis - 1, xi, &mut p, &mut dp);
        let one_m = 1.0 - xi * xi;
        let s = one_m.sqrt();
        let sm = s.powi(m as i32);
        for n in 0..basis {
            h[n] = sm * p[n];
            // (1 - x^2)^{1/2} (H' - kappa H / 2), with H' = s^m P' - m x s^{m-2} P
            let dh_scaled = sm * s * dp[n] - mf * xi * sm / s * p[n] - 0.5 * kappa * s * h[n];
            g[n] = dh_scaled;
        }
        for i in 0..basis {
            for j in 0..=i {
                let mut aij = g[i] * g[j];
                if m > 0 {
                    aij += mf * mf * h[i] * h[j] / one_m;
                }
                a[(i, j)] += wi * aij;
                b[(i, j)] += wi * h[i] * h[j];
            }
        }
    }
    for i in 0..basis {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
            b[(j, i)] = b[(i, j)];
        }
    }
    let chol = b.cholesky().ok_or_else(|| Error::EigenFailure("mass matrix is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(basis, basis))
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let scale = ev.last().copied().unwrap_or(1.0).abs().max(1.0);
    if ev[0] < -1e-9 * scale {
        return Err(Error::EigenFailure(format!("stiffness lost semidefiniteness: eigenvalue {:.3e}", ev[0])));
    }
    Ok(ev)
}

/// Smallest nonzero eigenvalue of mode m; for m = 0 the constant mode is
/// skipped after checking it is numerically zero.
pub fn mode_gap(kappa: f64, m: usize, basis: usize) -> Result<f64> {
    let ev = mode_spectrum(kappa, m, basis)?;
    if m > 0 {
        return Ok(ev[0]);
    }
    if ev[0].abs() > 1e-8 * (1.0 + ev[1]) {
        return Err(Error::EigenFailure(format!("constant mode has eigenvalue {:.3e}; basis too small", ev[0])));
    }
    Ok(ev[1])
}

/// Lambda_kappa on S^2: the minimum over azimuthal modes 0, 1, 2.
pub fn poincare_constant(kappa: f64) -> Result<f64> {
    poincare_constant_with(kappa, default_basis(kappa))
}

pub fn poincare_constant_with(kappa: f64, basis: usize) -> Result<f64> {
    POINCARE_MODES.iter().map(|&m| mode_gap(kappa, m, basis)).try_fold(f64::INFINITY, |acc, v| Ok(acc.min(v?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sphere_nodes;

    #[test]
    fn round_sphere_spectrum() {
        // l(l + 1) in every mode m <= l
        for m in 0..=2 {
            let ev = mode_spectrum(0.0, m, 20).unwrap();
            let first = if m == 0 { 1 } else { 0 };
            for (k, l) in (m.max(1)..m.max(1) + 4).enumerate() {
                let exact = (l * (l + 1)) as f64;
                assert!((ev[first + k] - exact).abs() < 1e-10, "m {m} l {l}: {}", ev[first + k]);
            }
        }
        assert!((poincare_constant(0.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn converged_and_continuous() {
        let a = poincare_constant_with(5.0, 40).unwrap();
        let b = poincare_constant_with(5.0, 80).unwrap();
        assert!((a - b).abs() < 1e-6);
        for k in [1.0, 5.0] {
            let d = (poincare_constant(k + 1e-3).unwrap() - poincare_constant(k).unwrap()).abs();
            assert!(d < 1e-2);
        }
    }

    /// Rayleigh quotients of a full 2-D polynomial basis on the sphere: no
    /// mode separation, so this also guards the m <= 2 restriction.
    fn full_sphere_gap(kappa: f64, degree: usize) -> f64 {
        let u = [0.0, 0.0, 1.0];
        let nodes = sphere_nodes(&u, 48, 48);
        // monomials x^a y^b z^c with c <= 1 span polynomials restricted to S^2
        let mut exps = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                for c in 0..=1usize.min(degree - a - b) {
                    exps.push((a, b, c));
                }
            }
        }
        let n = exps.len();
        let mut am = DMatrix::<f64>::zeros(n, n);
        let mut bm = DMatrix::<f64>::zeros(n, n);
        let mut mean = vec![0.0; n];
        let mut mass = 0.0;
        let pw = |v: f64, k: usize| v.powi(k as i32);
        let dpw = |v: f64, k: usize| if k == 0 { 0.0 } else { k as f64 * v.powi(k as i32 - 1) };
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; 3]; n];
        for nd in &nodes {
            let v = &nd.v;
            let wgt = nd.weight * (kappa * v[2]).exp();
            for (i, &(a, b, c)) in exps.iter().enumerate() {
                vals[i] = pw(v[0], a) * pw(v[1], b) * pw(v[2], c);
                let g = [
                    dpw(v[0], a) * pw(v[1], b) * pw(v[2], c),
                    pw(v[0], a) * dpw(v[1], b) * pw(v[2], c),
                    pw(v[0], a) * pw(v[1], b) * dpw(v[2], c),
                ];
                let gv = g[0] * v[0] + g[1] * v[1] + g[2] * v[2];
                grads[i] = [g[0] - gv * v[0], g[1] - gv * v[1], g[2] - gv * v[2]];
            }
            mass += wgt;
            for i in 0..n {
                mean[i] += wgt * vals[i];
                for j in 0..n {
                    am[(i, j)] +=
                        wgt * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1] + grads[i][2] * grads[j][2]);
                    bm[(i, j)] += wgt * vals[i] * vals[j];
                }
            }
        }
        // covariance form removes the constant direction
        for i in 0..n {
            for j in 0..n {
                bm[(i, j)] = bm[(i, j)] / mass - mean[i] * mean[j] / (mass * mass);
                am[(i, j)] /= mass;
            }
        }
        // drop the constant monomial, whose covariance row vanishes
        let keep: Vec<usize> = (0..n).filter(|&i| exps[i] != (0, 0, 0)).collect();
        let am = am.select_rows(&keep).select_columns(&keep);
        let bm = bm.select_rows(&keep).select_columns(&keep);
        let l = bm.cholesky().unwrap();
        let li = l.l().solve_lower_triangular(&DMatrix::identity(keep.len(), keep.len())).unwrap();
        let c = &li * am * li.transpose();
        let c = 0.5 * (&c + c.transpose());
        SymmetricEigen::new(c).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn agrees_with_full_sphere_discretization() {
        for kappa in [0.0, 1.0, 3.0] {
            let coarse = full_sphere_gap(kappa, 7);
            let modal = poincare_constant(kappa).unwrap();
            assert!((coarse - modal).abs() < 1e-4 * modal, "kappa {kappa}: {coarse} vs {modal}");
        }
    }
}
