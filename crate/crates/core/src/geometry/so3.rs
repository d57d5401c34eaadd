use nalgebra::{Matrix3, Vector3, SVD};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

/// Axis-angle vector, the coordinates of an antisymmetric matrix.
pub type AxialVector = Vector3<f64>;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Checks R^T R = I and det R = 1 within the default rotation tolerance.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        Self::with_tolerance(m, NumericPolicy::DEFAULT.rotation_tol)
    }

    pub fn with_tolerance(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        let orthogonality = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if !(orthogonality <= tol) || !((det - 1.0).abs() <= tol) {
            return Err(Error::NotARotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Skips validation; callers guarantee the invariant by construction.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &RotationMatrix) -> Self {
        Self(self.0 * other.0)
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Re-orthonormalizes accumulated round-off through the polar factor.
    pub(crate) fn renormalized(m: Matrix3<f64>) -> Self {
        let svd = SVD::new(m, true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut u = u;
            let k = argmin(&svd.singular_values);
            u.set_column(k, &(-u.column(k)));
            r = u * vt;
        }
        Self(r)
    }
}

/// [w]_x, the matrix with [w]_x z = w x z.
pub fn hat(w: &AxialVector) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// Inverse of [`hat`]; rejects matrices with a symmetric part above `antisym_tol`.
pub fn vee(p: &Matrix3<f64>) -> Result<AxialVector> {
    let sym = (p + p.transpose()) * 0.5;
    let s = sym.norm();
    if !(s <= NumericPolicy::DEFAULT.antisym_tol) {
        return Err(Error::NotAntisymmetric(s));
    }
    Ok(vee_antisym(p))
}

/// vee of the antisymmetric part of `p`.
pub fn vee_antisym(p: &Matrix3<f64>) -> AxialVector {
    Vector3::new(0.5 * (p[(2, 1)] - p[(1, 2)]), 0.5 * (p[(0, 2)] - p[(2, 0)]), 0.5 * (p[(1, 0)] - p[(0, 1)]))
}

/// The SO(3) inner product 1/2 Tr(X^T Y).
pub fn inner_so3(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    0.5 * x.dot(y)
}

/// Orthogonal projection of `m` onto T_A SO(3) = {P A : P antisymmetric}.
pub fn project_tangent_so3(a: &RotationMatrix, m: &Matrix3<f64>) -> Matrix3<f64> {
    let a = a.matrix();
    (m - a * m.transpose() * a) * 0.5
}

/// Rodrigues formula.
pub fn exp_so3(w: &AxialVector) -> RotationMatrix {
    let t2 = w.norm_squared();
    let t = t2.sqrt();
    let (s, c) = if t < 1e-4 {
        // sin t / t and (1 - cos t) / t^2 by Taylor series
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    let k = hat(w);
    RotationMatrix(Matrix3::identity() + k * s + k * k * c)
}

/// Principal logarithm; refuses angles within `angle_eps` of pi.
pub fn log_so3(r: &RotationMatrix) -> Result<AxialVector> {
    log_so3_with(r, NumericPolicy::DEFAULT.angle_eps)
}

pub fn log_so3_with(r: &RotationMatrix, angle_eps: f64) -> Result<AxialVector> {
    let m = r.matrix();
    let theta = r.angle();
    if theta > PI - angle_eps {
        return Err(Error::AngleNearPi { angle: theta });
    }
    let w = vee_antisym(m);
    if theta < 1e-4 {
        let t2 = theta * theta;
        return Ok(w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta < PI - 0.1 {
        return Ok(w * (theta / theta.sin()));
    }
    // sin(theta) is small: read the axis from the symmetric part
    let c = theta.cos();
    let s = (m + m.transpose()) * 0.5;
    let k = (0..3).max_by(|&i, &j| s[(i, i)].partial_cmp(&s[(j, j)]).unwrap()).unwrap();
    let nk = ((s[(k, k)] - c) / (1.0 - c)).max(0.0).sqrt();
    let mut n = Vector3::zeros();
    for i in 0..3 {
        n[i] = if i == k { nk } else { s[(i, k)] / ((1.0 - c) * nk) };
    }
    n /= n.norm();
    if n.dot(&w) < 0.0 {
        n = -n;
    }
    Ok(n * theta)
}

/// Rotation factor of G = PD(G) S with S symmetric positive definite.
pub fn polar_rotation(g: &Matrix3<f64>) -> Result<RotationMatrix> {
    polar_rotation_with(g, NumericPolicy::DEFAULT.singular_tol)
}

pub fn polar_rotation_with(g: &Matrix3<f64>, singular_tol: f64) -> Result<RotationMatrix> {
    if !g.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix".into()));
    }
    let svd = SVD::new(*g, true, true);
    let k = argmin(&svd.singular_values);
    let sigma_min = svd.singular_values[k];
    if !(sigma_min > singular_tol) {
        return Err(Error::NearSingular { sigma_min });
    }
    let (mut u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    if (u * vt).determinant() < 0.0 {
        u.set_column(k, &(-u.column(k)));
    }
    Ok(RotationMatrix(u * vt))
}

/// A Haar-distributed rotation (normalized Gaussian quaternion).
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let [w, x, y, z] = q.map(|c| c / n);
            return RotationMatrix::renormalized(Matrix3::new(
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ));
        }
    }
}

fn argmin(v: &Vector3<f64>) -> usize {
    (0..3).min_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap()).unwrap()
}
