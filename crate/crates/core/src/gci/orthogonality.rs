//! Divergence-form pairings of the linearized collision operator with test
//! functions, used to check the collision-invariant property.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;

use super::{GciBodySolution, GciSphereSolution};
use crate::error::{invalid, Error, Result};
use crate::geometry::{hat, uniform_rotation, vee_antisym, RotationMatrix, UnitVector};
use crate::quadrature::{rotate_node, rotation_nodes, sphere_nodes, RotationNode, SphereNode};
use crate::vmf::random_orthogonal;

/// A smooth positive density on S^{d-1} with its Euclidean gradient.
pub trait SphereDensity: Sync {
    fn value(&self, v: &[f64]) -> f64;
    fn gradient(&self, v: &[f64]) -> Vec<f64>;
}

/// A smooth positive density on SO(3) with its Euclidean (matrix) gradient.
pub trait RotationDensity: Sync {
    fn value(&self, a: &Matrix3<f64>) -> f64;
    fn gradient(&self, a: &Matrix3<f64>) -> Matrix3<f64>;
}

/// offset + sum_k w_k exp(kappa_k c_k . v) + sum_k t_k (e_k . v) exp(kappa0 u . v).
#[derive(Debug, Clone, PartialEq)]
pub struct VmfMixture {
    pub offset: f64,
    pub components: Vec<(f64, f64, Vec<f64>)>,
    pub tilts: Vec<(f64, Vec<f64>)>,
    pub tilt_kappa: f64,
    pub tilt_axis: Vec<f64>,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SphereDensity for VmfMixture {
    fn value(&self, v: &[f64]) -> f64 {
        let mut s = self.offset;
        for (w, k, c) in &self.components {
            s += w * (k * dotv(c, v)).exp();
        }
        let e = (self.tilt_kappa * dotv(&self.tilt_axis, v)).exp();
        for (t, dir) in &self.tilts {
            s += t * dotv(dir, v) * e;
        }
        s
    }

    fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; v.len()];
        for (w, k, c) in &self.components {
            let e = w * k * (k * dotv(c, v)).exp();
            g.iter_mut().zip(c).for_each(|(gi, ci)| *gi += e * ci);
        }
        let e = (self.tilt_kappa * dotv(&self.tilt_axis, v)).exp();
        for (t, dir) in &self.tilts {
            let l = dotv(dir, v);
            for i in 0..v.len() {
                g[i] += t * e * (dir[i] + l * self.tilt_kappa * self.tilt_axis[i]);
            }
        }
        g
    }
}

impl VmfMixture {
    /// Random mixture whose current satisfies P_{u perp} j_f = 0 on `nodes`.
    pub fn random_constrained<R: Rng + ?Sized>(u: &UnitVector, nodes: &[SphereNode], rng: &mut R) -> Self {
        let d = u.dim();
        let us = u.as_slice();
        // orthonormal directions spanning u-perp
        let mut perp: Vec<Vec<f64>> = Vec::new();
        while perp.len() < d - 1 {
            let mut w = random_orthogonal(us, rng);
            for p in &perp {
                let c = dotv(&w, p);
                w.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
            }
            let n = dotv(&w, &w).sqrt();
            if n > 1e-3 {
                perp.push(w.into_iter().map(|x| x / n).collect());
            }
        }
        loop {
            let ncomp = rng.random_range(1..=3);
            let components = (0..ncomp)
                .map(|_| {
                    let c = random_orthogonal(&vec![0.0; d], rng);
                    (rng.random_range(0.2..1.0), rng.random_range(0.2..3.0), c)
                })
                .collect();
            let mut f = VmfMixture {
                offset: rng.random_range(0.2..1.0),
                components,
                tilts: perp.iter().map(|p| (0.0, p.clone())).collect(),
                tilt_kappa: rng.random_range(0.5..2.0),
                tilt_axis: us.to_vec(),
            };
            // transverse current is linear in the tilt coefficients
            let base = sphere_current(&f, nodes);
            let mut m = DMatrix::zeros(d - 1, d - 1);
            for (k, _) in perp.iter().enumerate() {
                let mut unit = f.clone();
                unit.offset = 0.0;
                unit.components.clear();
                unit.tilts[k].0 = 1.0;
                let jk = sphere_current(&unit, nodes);
                for (i, p) in perp.iter().enumerate() {
                    m[(i, k)] = dotv(&jk, p);
                }
            }
            let rhs = DVector::from_iterator(d - 1, perp.iter().map(|p| -dotv(&base, p)));
            let Some(c) = m.lu().solve(&rhs) else { continue };
            for k in 0..d - 1 {
                f.tilts[k].0 = c[k];
            }
            if nodes.iter().all(|n| f.value(&n.v) > 0.0) {
                return f;
            }
        }
    }
}

fn sphere_current(f: &dyn SphereDensity, nodes: &[SphereNode]) -> Vec<f64> {
    let d = nodes[0].v.len();
    let mut j = vec![0.0; d];
    for n in nodes {
        let w = n.weight * f.value(&n.v);
        j.iter_mut().zip(&n.v).for_each(|(a, b)| *a += w * b);
    }
    j
}

/// Signed pairing and its absolute scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    /// -int (grad f - kappa f P_{v perp} u) . grad psi
    pub value: f64,
    /// int (|grad f| + kappa f |P_{v perp} u|) |grad psi|
    pub scale: f64,
}

impl Pairing {
    /// |value| / scale, zero when the test function is constant.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            0.0
        }
    }
}

/// Pairs Q(f; u) with a test function given by its tangent gradient at each node.
pub fn sphere_pairing(
    f: &dyn SphereDensity,
    u: &UnitVector,
    kappa: f64,
    nodes: &[SphereNode],
    grad_psi: impl Fn(&SphereNode) -> Vec<f64>,
) -> Pairing {
    let us = u.as_slice();
    let (mut value, mut scale) = (0.0, 0.0);
    for n in nodes {
        let v = &n.v;
        let fv = f.value(v);
        let gf = f.gradient(v);
        let c = dotv(&gf, v);
        let xu = dotv(us, v);
        let tf: Vec<f64> = (0..v.len()).map(|i| gf[i] - c * v[i]).collect();
        let tu: Vec<f64> = (0..v.len()).map(|i| us[i] - xu * v[i]).collect();
        let flux: Vec<f64> = tf.iter().zip(&tu).map(|(a, b)| a - kappa * fv * b).collect();
        let gp = grad_psi(n);
        value -= n.weight * dotv(&flux, &gp);
        let mag = dotv(&tf, &tf).sqrt() + kappa * fv.abs() * dotv(&tu, &tu).sqrt();
        scale += n.weight * mag * dotv(&gp, &gp).sqrt();
    }
    Pairing { value, scale }
}

/// Gradient of psi(v) = A . P_{u perp} v h(u . v) at a node aligned with u.
pub fn sphere_gci_gradient(sol: &GciSphereSolution, u: &[f64], a: &[f64], n: &SphereNode) -> Vec<f64> {
    let (_, gp) = sol.g_at(n.theta);
    let h = sol.h_at(n.theta);
    let (s, c) = n.theta.sin_cos();
    let aw = dotv(a, &n.omega);
    (0..u.len())
        .map(|i| {
            let e_theta = -s * u[i] + c * n.omega[i];
            gp * aw * e_theta + h * (a[i] - aw * n.omega[i])
        })
        .collect()
}

/// Relative residual of int Q(f; u) psi for psi = A . P_{u perp} v h(u . v).
///
/// Fails with `ConstraintViolated` when |P_{u perp} j_f| / rho_f exceeds `constraint_tol`.
pub fn gci_orthogonality_residual(
    f: &dyn SphereDensity,
    u: &UnitVector,
    a: &[f64],
    sol: &GciSphereSolution,
    nodes: &[SphereNode],
    constraint_tol: f64,
) -> Result<f64> {
    if u.dim() != sol.d || a.len() != sol.d {
        return Err(invalid("dimension mismatch between density, axis and solution"));
    }
    let rho: f64 = nodes.iter().map(|n| n.weight * f.value(&n.v)).sum();
    let j = sphere_current(f, nodes);
    let jp = u.project(&j);
    let norm = dotv(&jp, &jp).sqrt() / rho.abs().max(f64::MIN_POSITIVE);
    if norm > constraint_tol {
        return Err(Error::ConstraintViolated { norm });
    }
    let a = u.project(a);
    Ok(sphere_pairing(f, u, sol.kappa, nodes, |n| sphere_gci_gradient(sol, u.as_slice(), &a, n)).relative())
}

/// Default product rule for sphere pairings aligned with `u`.
pub fn default_sphere_nodes(u: &UnitVector) -> Vec<SphereNode> {
    sphere_nodes(u.as_slice(), 96, 64)
}

/// offset + sum_k w_k exp(kappa_k Lambda_k . A)
///   + sum_k t_k (1/2 Tr((lambda [e_k]_x)^T A)) exp(kappa0 lambda . A).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMixture {
    pub offset: f64,
    pub components: Vec<(f64, f64, RotationMatrix)>,
    pub tilts: [f64; 3],
    pub tilt_kappa: f64,
    pub lambda: RotationMatrix,
}

impl RotationDensity for RotationMixture {
    fn value(&self, a: &Matrix3<f64>) -> f64 {
        let mut s = self.offset;
        for (w, k, c) in &self.components {
            s += w * (k * 0.5 * c.matrix().dot(a)).exp();
        }
        let l = self.lambda.matrix();
        let e = (self.tilt_kappa * 0.5 * l.dot(a)).exp();
        for k in 0..3 {
            let dir = l * hat(&Vector3::ith(k, 1.0));
            s += self.tilts[k] * 0.5 * dir.dot(a) * e;
        }
        s
    }

    fn gradient(&self, a: &Matrix3<f64>) -> Matrix3<f64> {
        let mut g = Matrix3::zeros();
        for (w, k, c) in &self.components {
            g += c.matrix() * (w * 0.5 * k * (k * 0.5 * c.matrix().dot(a)).exp());
        }
        let l = self.lambda.matrix();
        let e = (self.tilt_kappa * 0.5 * l.dot(a)).exp();
        for k in 0..3 {
            let dir = l * hat(&Vector3::ith(k, 1.0));
            let lin = 0.5 * dir.dot(a);
            g += (dir * 0.5 + l * (0.5 * self.tilt_kappa * lin)) * (self.tilts[k] * e);
        }
        g
    }
}

/// antisym(lambda^T g_f) as an axial vector, g_f = int f A dA.
fn rotation_constraint(
    f: &dyn RotationDensity,
    lambda: &RotationMatrix,
    nodes: &[RotationNode],
) -> (Vector3<f64>, f64) {
    let mut g = Matrix3::zeros();
    let mut rho = 0.0;
    for n in nodes {
        let a = rotate_node(lambda, n);
        let w = n.weight * f.value(&a);
        g += a * w;
        rho += w;
    }
    let b = lambda.matrix().transpose() * g;
    (vee_antisym(&b), rho)
}

impl RotationMixture {
    /// Random mixture with antisym(lambda^T g_f) = 0 on `nodes`.
    pub fn random_constrained<R: Rng + ?Sized>(lambda: &RotationMatrix, nodes: &[RotationNode], rng: &mut R) -> Self {
        loop {
            let ncomp = rng.random_range(1..=3);
            let mut f = RotationMixture {
                offset: rng.random_range(0.2..1.0),
                components: (0..ncomp)
                    .map(|_| (rng.random_range(0.2..1.0), rng.random_range(0.2..2.5), uniform_rotation(rng)))
                    .collect(),
                tilts: [0.0; 3],
                tilt_kappa: rng.random_range(0.5..2.0),
                lambda: *lambda,
            };
            let (base, _) = rotation_constraint(&f, lambda, nodes);
            let mut m = Matrix3::zeros();
            for k in 0..3 {
                let mut unit = f.clone();
                unit.offset = 0.0;
                unit.components.clear();
                unit.tilts = [0.0; 3];
                unit.tilts[k] = 1.0;
                m.set_column(k, &rotation_constraint(&unit, lambda, nodes).0);
            }
            let Some(c) = m.lu().solve(&(-base)) else { continue };
            f.tilts = [c[0], c[1], c[2]];
            if nodes.iter().all(|n| f.value(&rotate_node(lambda, n)) > 0.0) {
                return f;
            }
        }
    }
}

/// Pairs Q(f; lambda) with a test function given by its left-invariant frame
/// derivatives E_k psi, k = 1..3, at each node.
pub fn rotation_pairing(
    f: &dyn RotationDensity,
    lambda: &RotationMatrix,
    kappa: f64,
    nodes: &[RotationNode],
    frame_psi: impl Fn(&RotationNode) -> Vector3<f64>,
) -> Pairing {
    let l = lambda.matrix();
    let (mut value, mut scale) = (0.0, 0.0);
    for n in nodes {
        let a = rotate_node(lambda, n);
        let fv = f.value(&a);
        let gf = f.gradient(&a);
        let mut ef = Vector3::zeros();
        let mut el = Vector3::zeros();
        for k in 0..3 {
            let dir = a * hat(&Vector3::ith(k, 1.0));
            ef[k] = gf.dot(&dir);
            el[k] = 0.5 * l.dot(&dir);
        }
        let flux = ef - el * (kappa * fv);
        let ep = frame_psi(n);
        value -= n.weight * flux.dot(&ep);
        scale += n.weight * (ef.norm() + kappa * fv.abs() * el.norm()) * ep.norm();
    }
    Pairing { value, scale }
}

/// E_k psi for psi(A) = P . (lambda^T A) h(theta), P = [p]_x, at a node B = exp(theta [n]_x).
pub fn rotation_gci_frame(sol: &GciBodySolution, p: &Vector3<f64>, n: &RotationNode) -> Vector3<f64> {
    let (_, dp) = sol.p_at(n.theta);
    let h = sol.h_at(n.theta);
    let radial = (dp - h * n.theta.cos()) * p.dot(&n.axis);
    let pm = hat(p);
    let b = n.relative.matrix();
    Vector3::from_fn(|k, _| radial * n.axis[k] + h * 0.5 * pm.dot(&(b * hat(&Vector3::ith(k, 1.0)))))
}

/// Relative residual of int Q(f; lambda) psi for psi = P . (lambda^T A) h(lambda . A).
pub fn gci_orthogonality_residual_body(
    f: &dyn RotationDensity,
    lambda: &RotationMatrix,
    p: &Vector3<f64>,
    sol: &GciBodySolution,
    nodes: &[RotationNode],
    constraint_tol: f64,
) -> Result<f64> {
    let (c, rho) = rotation_constraint(f, lambda, nodes);
    let norm = c.norm() / rho.abs().max(f64::MIN_POSITIVE);
    if norm > constraint_tol {
        return Err(Error::ConstraintViolated { norm });
    }
    Ok(rotation_pairing(f, lambda, sol.kappa, nodes, |n| rotation_gci_frame(sol, p, n)).relative())
}

/// Default angle-axis rule for rotation pairings.
pub fn default_rotation_nodes() -> Vec<RotationNode> {
    rotation_nodes(48, 16, 24)
}
