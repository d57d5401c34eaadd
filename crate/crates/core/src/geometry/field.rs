use nalgebra::Matrix3;

use super::so3::{vee_antisym, RotationMatrix};
use crate::error::{invalid, Error, Result};
use crate::policy::NumericPolicy;

/// A rotation field sampled on a uniform 3-D grid, x-index fastest.
#[derive(Debug, Clone)]
pub struct RotationField {
    pub shape: [usize; 3],
    pub h: f64,
    pub values: Vec<RotationMatrix>,
}

impl RotationField {
    pub fn new(shape: [usize; 3], h: f64, values: Vec<RotationMatrix>) -> Result<Self> {
        if shape.iter().any(|&n| n < 3) {
            return Err(invalid("every grid axis needs at least 3 points"));
        }
        if !(h > 0.0) {
            return Err(invalid("grid spacing must be positive"));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(invalid("field size does not match grid shape"));
        }
        Ok(Self { shape, h, values })
    }

    /// Samples `f` at x = origin + h * index.
    pub fn from_fn(
        shape: [usize; 3],
        h: f64,
        origin: [f64; 3],
        f: impl Fn([f64; 3]) -> RotationMatrix,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(shape.iter().product());
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    let x = [origin[0] + h * i as f64, origin[1] + h * j as f64, origin[2] + h * k as f64];
                    values.push(f(x));
                }
            }
        }
        Self::new(shape, h, values)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    fn at(&self, idx: [usize; 3]) -> &Matrix3<f64> {
        self.values[self.index(idx[0], idx[1], idx[2])].matrix()
    }

    /// Second-order difference of the field along `axis` at `idx`.
    fn derivative(&self, idx: [usize; 3], axis: usize) -> Matrix3<f64> {
        let n = self.shape[axis];
        let shifted = |off: isize| {
            let mut p = idx;
            p[axis] = (idx[axis] as isize + off) as usize;
            *self.at(p)
        };
        let i = idx[axis];
        if i == 0 {
            (shifted(0) * -3.0 + shifted(1) * 4.0 - shifted(2)) / (2.0 * self.h)
        } else if i == n - 1 {
            (shifted(0) * 3.0 - shifted(-1) * 4.0 + shifted(-2)) / (2.0 * self.h)
        } else {
            (shifted(1) - shifted(-1)) / (2.0 * self.h)
        }
    }
}

/// Per-point matrices with (w . grad) lambda = [Dx w]_x lambda, plus trace and curl parts.
#[derive(Debug, Clone)]
pub struct RotationFieldOps {
    pub dx: Vec<Matrix3<f64>>,
    pub delta: Vec<f64>,
    pub r: Vec<Matrix3<f64>>,
    /// Largest tangency defect encountered.
    pub max_defect: f64,
}

pub fn rotation_field_operators(field: &RotationField) -> Result<RotationFieldOps> {
    rotation_field_operators_with(field, NumericPolicy::DEFAULT.tangency_tol)
}

pub fn rotation_field_operators_with(field: &RotationField, tangency_tol: f64) -> Result<RotationFieldOps> {
    let n = field.values.len();
    let mut dx = Vec::with_capacity(n);
    let mut max_defect: f64 = 0.0;
    for k in 0..field.shape[2] {
        for j in 0..field.shape[1] {
            for i in 0..field.shape[0] {
                let idx = [i, j, k];
                let lt = field.at(idx).transpose();
                let mut d = Matrix3::zeros();
                for axis in 0..3 {
                    let x = field.derivative(idx, axis) * lt;
                    let defect = ((x + x.transpose()) * 0.5).norm() / x.norm().max(1.0);
                    max_defect = max_defect.max(defect);
                    if !(defect <= tangency_tol) {
                        return Err(Error::TangencyDefect { index: field.index(i, j, k), defect });
                    }
                    d.set_column(axis, &vee_antisym(&x));
                }
                dx.push(d);
            }
        }
    }
    let delta = dx.iter().map(|d| d.trace()).collect();
    let r = dx.iter().map(|d| d - d.transpose()).collect();
    Ok(RotationFieldOps { dx, delta, r, max_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_so3, hat, uniform_rotation};
    use nalgebra::Vector3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // b(x) = B x, so div b = tr B and curl b = vee(B - B^T)
    fn linear_b() -> Matrix3<f64> {
        Matrix3::new(0.3, -0.2, 0.5, 0.7, -0.1, 0.25, -0.4, 0.6, 0.2)
    }

    fn field(h: f64, l0: RotationMatrix) -> RotationField {
        let b = linear_b();
        RotationField::from_fn([3, 3, 3], h, [-h, -h, -h], |x| exp_so3(&(b * Vector3::from(x))).compose(&l0)).unwrap()
    }

    fn center_error(h: f64) -> f64 {
        let l0 = exp_so3(&Vector3::new(0.1, 0.4, -0.3));
        let ops = rotation_field_operators(&field(h, l0)).unwrap();
        let c = 13;
        let b = linear_b();
        let curl = vee_antisym(&(b - b.transpose()));
        (ops.delta[c] - b.trace()).abs() + (ops.r[c] - hat(&curl)).norm()
    }

    #[test]
    fn constant_field_has_zero_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l0 = uniform_rotation(&mut rng);
        let f = RotationField::new([3, 4, 5], 0.1, vec![l0; 60]).unwrap();
        let ops = rotation_field_operators(&f).unwrap();
        assert!(ops.dx.iter().all(|d| d.norm() < 1e-13));
        assert!(ops.delta.iter().all(|d| d.abs() < 1e-13));
    }

    #[test]
    fn divergence_and_curl_of_exponential_field() {
        let e = center_error(1e-3);
        assert!(e < 1e-5, "error {e}");
        let ratio = center_error(2e-2) / center_error(1e-2);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn invariant_under_right_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l0 = exp_so3(&Vector3::new(0.1, 0.4, -0.3));
        let r0 = uniform_rotation(&mut rng);
        let a = rotation_field_operators(&field(0.05, l0)).unwrap();
        let b = rotation_field_operators(&field(0.05, l0.compose(&r0))).unwrap();
        for (x, y) in a.dx.iter().zip(&b.dx) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_structure() {
        let l0 = exp_so3(&Vector3::new(0.1, 0.4, -0.3));
        let ops = rotation_field_operators(&field(0.05, l0)).unwrap();
        for ((d, r), t) in ops.dx.iter().zip(&ops.r).zip(&ops.delta) {
            assert_eq!(*r, d - d.transpose());
            assert_eq!(*t, d.trace());
        }
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let l0 = RotationMatrix::identity();
        let f = RotationField::from_fn([3, 3, 3], 1.0, [0.0; 3], |x| {
            exp_so3(&(linear_b() * Vector3::from(x) * 3.0)).compose(&l0)
        })
        .unwrap();
        assert!(matches!(rotation_field_operators(&f), Err(Error::TangencyDefect { .. })));
    }
}
