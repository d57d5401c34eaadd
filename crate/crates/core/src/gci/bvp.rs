//! Weighted Sturm-Liouville problems on (0, pi) with homogeneous Dirichlet ends:
//! -(a y')' + b y = f. Solved by P1 elements on nested graded grids, with
//! Richardson extrapolation of the nodal values and a natural cubic spline.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::spline::{solve_tridiagonal, NaturalSpline};

pub(crate) trait SturmLiouville: Sync {
    fn a(&self, t: f64) -> f64;
    fn b(&self, t: f64) -> f64;
    fn f(&self, t: f64) -> f64;
}

const GAUSS5_X: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GAUSS5_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// theta_i = pi G(i/n) with G(s) = 2 s^2 on [0, 1/2], mirrored on [1/2, 1].
pub fn graded_grid(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let g = if s < 0.5 { 2.0 * s * s } else { 1.0 - 2.0 * (1.0 - s) * (1.0 - s) };
            PI * g
        })
        .collect()
}

/// Calls `visit(t, w)` at the 5 Gauss points of [lo, hi].
fn gauss5(lo: f64, hi: f64, mut visit: impl FnMut(f64, f64)) {
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    for k in 0..5 {
        visit(c + r * GAUSS5_X[k], r * GAUSS5_W[k]);
    }
}

/// Nodal P1 Galerkin solution on `grid`, zero at both ends.
pub(crate) fn solve_p1<P: SturmLiouville>(p: &P, grid: &[f64]) -> Vec<f64> {
    let n = grid.len() - 1;
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n + 1]; // off[i] couples nodes i and i+1
    let mut rhs = vec![0.0; n + 1];
    for e in 0..n {
        let (lo, hi) = (grid[e], grid[e + 1]);
        let h = hi - lo;
        gauss5(lo, hi, |t, w| {
            let a = p.a(t);
            let b = p.b(t);
            let f = p.f(t);
            let l = (hi - t) / h;
            let r = (t - lo) / h;
            diag[e] += w * (a / (h * h) + b * l * l);
            diag[e + 1] += w * (a / (h * h) + b * r * r);
            off[e] += w * (-a / (h * h) + b * l * r);
            rhs[e] += w * f * l;
            rhs[e + 1] += w * f * r;
        });
    }
    // interior unknowns 1..n-1
    let m = n - 1;
    let sub: Vec<f64> = (0..m).map(|k| if k == 0 { 0.0 } else { off[k] }).collect();
    let sup: Vec<f64> = (0..m).map(|k| if k + 1 == m { 0.0 } else { off[k + 1] }).collect();
    let d: Vec<f64> = (1..n).map(|i| diag[i]).collect();
    let r: Vec<f64> = (1..n).map(|i| rhs[i]).collect();
    let x = solve_tridiagonal(&sub, &d, &sup, &r);
    let mut y = vec![0.0; n + 1];
    y[1..n].copy_from_slice(&x);
    y
}

/// Test functions for the weak residual: sin(j t), j = 1..=count.
pub(crate) const RESIDUAL_MODES: usize = 20;

/// max_j |a(y, phi_j) - l(phi_j)| / max_j |l(phi_j)| over sine modes, integrated
/// with 5 Gauss points per interval of `grid`.
pub(crate) fn weak_residual<P: SturmLiouville>(p: &P, y: &NaturalSpline, grid: &[f64]) -> f64 {
    let modes: Vec<f64> = (1..=RESIDUAL_MODES).map(|j| j as f64).collect();
    let (res, load) = weak_forms(
        p,
        |t| {
            let (v, d, _) = y.eval_all(t);
            (v, d)
        },
        grid,
        &modes,
    );
    let num = res.iter().zip(&load).map(|(r, l)| (r - l).abs()).fold(0.0, f64::max);
    let den = load.iter().map(|l| l.abs()).fold(0.0, f64::max);
    num / den
}

/// (a(y, phi_j), l(phi_j)) for phi_j = sin(j t).
pub(crate) fn weak_forms<P: SturmLiouville>(
    p: &P,
    y: impl Fn(f64) -> (f64, f64),
    grid: &[f64],
    modes: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut bil = vec![0.0; modes.len()];
    let mut lin = vec![0.0; modes.len()];
    for e in 0..grid.len() - 1 {
        gauss5(grid[e], grid[e + 1], |t, w| {
            let (v, d) = y(t);
            let (a, b, f) = (p.a(t), p.b(t), p.f(t));
            for (k, j) in modes.iter().enumerate() {
                let (s, c) = (j * t).sin_cos();
                bil[k] += w * (a * d * j * c + b * v * s);
                lin[k] += w * f * s;
            }
        });
    }
    (bil, lin)
}

/// Integral of `q` over (0, pi) with 5 Gauss points per interval of `grid`.
pub(crate) fn integrate_on(grid: &[f64], q: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for e in 0..grid.len() - 1 {
        gauss5(grid[e], grid[e + 1], |t, w| s += w * q(t));
    }
    s
}

/// Extrapolated solution of a Sturm-Liouville problem.
#[derive(Debug, Clone)]
pub(crate) struct ExtrapolatedSolve {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
    pub spline: NaturalSpline,
    pub weak_residual: f64,
    /// max|y_{n/2} - y_n| / max|y_n - y_{2n}| of the base P1 scheme.
    pub convergence_ratio: f64,
}

pub(crate) fn solve_extrapolated<P: SturmLiouville>(p: &P, n: usize) -> Result<ExtrapolatedSolve> {
    if n < 64 || !n.is_multiple_of(2) {
        return Err(invalid(format!("grid size must be even and >= 64, got {n}")));
    }
    let coarse = graded_grid(n / 2);
    let grid = graded_grid(n);
    let fine = graded_grid(2 * n);
    let (y_c, (y, y_f)) =
        rayon::join(|| solve_p1(p, &coarse), || rayon::join(|| solve_p1(p, &grid), || solve_p1(p, &fine)));
    let d1 = (0..=n / 2).map(|i| (y_c[i] - y[2 * i]).abs()).fold(0.0, f64::max);
    let d2 = (0..=n).map(|i| (y[i] - y_f[2 * i]).abs()).fold(0.0, f64::max);
    let convergence_ratio = if d2 > 0.0 { d1 / d2 } else { f64::INFINITY };
    if !(convergence_ratio >= 2.0) {
        return Err(Error::NoConvergence(format!(
            "P1 self-convergence ratio {convergence_ratio:.3} under grid doubling"
        )));
    }
    if y_f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence("non-finite solution".into()));
    }
    let values: Vec<f64> = (0..=n).map(|i| (4.0 * y_f[2 * i] - y[i]) / 3.0).collect();
    let spline = NaturalSpline::new(grid.clone(), values.clone())?;
    let weak_residual = weak_residual(p, &spline, &fine);
    Ok(ExtrapolatedSolve { theta: grid, values, spline, weak_residual, convergence_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    // -y'' + y = (1 + 1) sin t  has solution sin t
    struct Model;
    impl SturmLiouville for Model {
        fn a(&self, _: f64) -> f64 {
            1.0
        }
        fn b(&self, _: f64) -> f64 {
            1.0
        }
        fn f(&self, t: f64) -> f64 {
            2.0 * t.sin()
        }
    }

    #[test]
    fn graded_grid_is_symmetric_and_clustered() {
        let g = graded_grid(64);
        assert_eq!(g[0], 0.0);
        assert!((g[64] - PI).abs() < 1e-15);
        assert!((g[32] - PI / 2.0).abs() < 1e-15);
        assert!(g[1] < (g[33] - g[32]) / 10.0);
        for i in 0..=64 {
            assert!((g[i] + g[64 - i] - PI).abs() < 1e-14);
        }
    }

    #[test]
    fn model_problem_converges() {
        let s = solve_extrapolated(&Model, 256).unwrap();
        let err = s.theta.iter().zip(&s.values).map(|(t, v)| (v - t.sin()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
        assert!((s.convergence_ratio - 4.0).abs() < 0.5);
        assert!(s.weak_residual < 1e-8);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(solve_extrapolated(&Model, 32).is_err());
        assert!(solve_extrapolated(&Model, 65).is_err());
    }
}
