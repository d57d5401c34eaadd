//! Manifold primitives for the unit sphere and the rotation group.

mod field;
mod so3;

pub use field::{rotation_field_operators, rotation_field_operators_with, RotationField, RotationFieldOps};
pub use so3::{
    exp_so3, hat, inner_so3, log_so3, log_so3_with, polar_rotation, polar_rotation_with, project_tangent_so3,
    uniform_rotation, vee, vee_antisym, AxialVector, RotationMatrix,
};

use crate::error::{invalid, Result};
use crate::policy::NumericPolicy;

/// A point of the unit sphere S^{d-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Wraps `coords` after checking |coords| = 1.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("unit vectors need dimension >= 2"));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > NumericPolicy::DEFAULT.unit_norm_tol {
            return Err(invalid(format!("vector norm {n} is not 1")));
        }
        Ok(Self { coords })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalize(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid("unit vectors need dimension >= 2"));
        }
        let n = norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self { coords: coords.into_iter().map(|c| c / n).collect() })
    }

    /// The basis vector e_k of R^d.
    pub fn basis(d: usize, k: usize) -> Self {
        assert!(d >= 2 && k < d);
        let mut coords = vec![0.0; d];
        coords[k] = 1.0;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        dot(&self.coords, w)
    }

    /// (Id - v v^T) w
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        project_tangent_sphere(self, w)
    }
}

/// Orthogonal projection of `w` onto the tangent space of the sphere at `v`.
pub fn project_tangent_sphere(v: &UnitVector, w: &[f64]) -> Vec<f64> {
    assert_eq!(v.dim(), w.len(), "dimension mismatch");
    let c = v.dot(w);
    w.iter().zip(v.as_slice()).map(|(wi, vi)| wi - c * vi).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two unit vectors completing `u` (in R^3) to a right-handed orthonormal frame.
pub(crate) fn complete_frame(u: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3).min_by(|&i, &j| u[i].abs().partial_cmp(&u[j].abs()).unwrap()).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let a = cross(u, &e);
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let a = [a[0] / na, a[1] / na, a[2] / na];
    let b = cross(u, &a);
    (a, b)
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(v: Vec<f64>) -> UnitVector {
        UnitVector::normalize(v).unwrap()
    }

    #[test]
    fn projection_examples() {
        let e1 = UnitVector::basis(3, 0);
        let p = project_tangent_sphere(&e1, &[1.0, 0.0, 0.0]);
        assert!(norm(&p) < 1e-15);
        let p = project_tangent_sphere(&e1, &[0.0, 1.0, 0.0]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(UnitVector::new(vec![1.0, 1.0]).is_err());
        assert!(UnitVector::normalize(vec![0.0, 0.0, 0.0]).is_err());
        assert!(UnitVector::new(vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_self_adjoint(
            v in prop::collection::vec(-1.0f64..1.0, 3),
            a in prop::collection::vec(-2.0f64..2.0, 3),
            b in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            prop_assume!(norm(&v) > 1e-3);
            let v = unit(v);
            let pa = project_tangent_sphere(&v, &a);
            let ppa = project_tangent_sphere(&v, &pa);
            for (x, y) in pa.iter().zip(&ppa) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!(v.dot(&pa).abs() < 1e-12);
            let pb = project_tangent_sphere(&v, &b);
            prop_assert!((dot(&pa, &b) - dot(&a, &pb)).abs() < 1e-12);
        }

        #[test]
        fn normalize_gives_unit_norm(v in prop::collection::vec(-10.0f64..10.0, 2..6)) {
            prop_assume!(norm(&v) > 1e-6);
            let u = unit(v);
            prop_assert!((norm(u.as_slice()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let u = [0.3, -0.5, 0.81];
        let n: f64 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let u = [u[0] / n.sqrt(), u[1] / n.sqrt(), u[2] / n.sqrt()];
        let (a, b) = complete_frame(&u);
        assert!(dot(&a, &u).abs() < 1e-15);
        assert!(dot(&b, &u).abs() < 1e-15);
        assert!(dot(&a, &b).abs() < 1e-15);
        assert!((norm(&b) - 1.0).abs() < 1e-15);
    }
}
