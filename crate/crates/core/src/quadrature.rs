//! Gauss-Legendre and trapezoid rules, and the sphere/SO(3) product rules
//! built from them. All sphere and rotation rules carry unit total mass.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

use crate::geometry::{complete_frame, exp_so3, RotationMatrix};

/// What the nodes of a one-dimensional rule parametrize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureDomain {
    /// x = cos(theta) on [-1, 1].
    CosTheta,
    /// theta on [0, pi].
    Theta,
    /// periodic angle on [0, 2 pi).
    Azimuth,
    /// generic interval [a, b].
    Interval(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: QuadratureDomain,
}

impl QuadratureRule {
    /// n-point Gauss-Legendre rule on [-1, 1].
    pub fn gauss_legendre(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights, domain: QuadratureDomain::CosTheta }
    }

    /// Gauss-Legendre rule mapped onto [a, b].
    pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let domain = if a == 0.0 && b == PI { QuadratureDomain::Theta } else { QuadratureDomain::Interval(a, b) };
        Self { nodes: x.iter().map(|t| c + r * t).collect(), weights: w.iter().map(|t| r * t).collect(), domain }
    }

    /// Periodic trapezoid rule on [0, 2 pi), offset by half a cell.
    pub fn azimuth(n: usize) -> Self {
        assert!(n >= 1);
        let h = 2.0 * PI / n as f64;
        Self {
            nodes: (0..n).map(|k| h * (k as f64 + 0.5)).collect(),
            weights: vec![h; n],
            domain: QuadratureDomain::Azimuth,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes (ascending) and weights of the n-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
pub(crate) fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Unit-mass rule for integrals over S^{d-1} of functions of x = u . v.
///
/// Odd d integrates in x against (1 - x^2)^{(d-3)/2}; even d integrates in
/// theta against sin^{d-2} theta, so every weight stays smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMarginalRule {
    pub d: usize,
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SphereMarginalRule {
    pub fn new(d: usize, n: usize) -> Self {
        assert!(d >= 2, "sphere dimension must be >= 2");
        let (x, w): (Vec<f64>, Vec<f64>) = if d % 2 == 1 {
            let (t, w) = gauss_legendre(n);
            let p = (d as i32 - 3) / 2;
            let w = t.iter().zip(&w).map(|(t, w)| w * (1.0 - t * t).powi(p)).collect();
            (t, w)
        } else {
            let r = QuadratureRule::gauss_legendre_on(n, 0.0, PI);
            let p = d as i32 - 2;
            // ascending x
            let pairs: Vec<(f64, f64)> =
                r.nodes.iter().zip(&r.weights).rev().map(|(th, w)| (th.cos(), w * th.sin().powi(p))).collect();
            pairs.into_iter().unzip()
        };
        let total: f64 = w.iter().sum();
        Self { d, x, weights: w.into_iter().map(|w| w / total).collect() }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Unit-mass rule for the rotation angle under the Haar measure,
/// density (1 - cos theta) / pi on [0, pi].
#[derive(Debug, Clone, PartialEq)]
pub struct HaarAngleRule {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HaarAngleRule {
    pub fn new(n: usize) -> Self {
        let r = QuadratureRule::gauss_legendre_on(n, 0.0, PI);
        let weights = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * haar_angle_density(*t)).collect();
        Self { theta: r.nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.theta.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// (1 - cos theta) / pi, the angle marginal of the normalized Haar measure.
pub fn haar_angle_density(theta: f64) -> f64 {
    (1.0 - theta.cos()) / PI
}

/// A node of a full-sphere rule written in coordinates aligned with an axis u:
/// v = cos(theta) u + sin(theta) omega with omega a unit vector orthogonal to u.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereNode {
    pub v: Vec<f64>,
    pub theta: f64,
    pub omega: Vec<f64>,
    pub weight: f64,
}

/// Unit-mass product rule on S^1 or S^2 aligned with `u`.
///
/// S^1 uses `azimuth` equispaced angles; S^2 uses `polar` Gauss-Legendre
/// nodes in cos(theta) times `azimuth` trapezoid nodes.
pub fn sphere_nodes(u: &[f64], polar: usize, azimuth: usize) -> Vec<SphereNode> {
    match u.len() {
        2 => {
            let perp = [-u[1], u[0]];
            let n = azimuth.max(polar);
            QuadratureRule::azimuth(n)
                .nodes
                .iter()
                .map(|&a| {
                    let (s, c) = a.sin_cos();
                    let sign = if s >= 0.0 { 1.0 } else { -1.0 };
                    SphereNode {
                        v: vec![c * u[0] + s * perp[0], c * u[1] + s * perp[1]],
                        theta: c.clamp(-1.0, 1.0).acos(),
                        omega: vec![sign * perp[0], sign * perp[1]],
                        weight: 1.0 / n as f64,
                    }
                })
                .collect()
        }
        3 => {
            let u3 = [u[0], u[1], u[2]];
            let (a, b) = complete_frame(&u3);
            let (xs, ws) = gauss_legendre(polar);
            let phi = QuadratureRule::azimuth(azimuth);
            let mut out = Vec::with_capacity(polar * azimuth);
            for (x, w) in xs.iter().zip(&ws) {
                let s = (1.0 - x * x).sqrt();
                for p in &phi.nodes {
                    let (sp, cp) = p.sin_cos();
                    let om: Vec<f64> = (0..3).map(|i| cp * a[i] + sp * b[i]).collect();
                    out.push(SphereNode {
                        v: (0..3).map(|i| x * u3[i] + s * om[i]).collect(),
                        theta: x.acos(),
                        omega: om,
                        weight: 0.5 * w / azimuth as f64,
                    });
                }
            }
            out
        }
        d => panic!("full-sphere rules are implemented for d = 2, 3 only (got {d})"),
    }
}

/// A node of the angle-axis rule on SO(3), relative to a reference rotation:
/// A = lambda exp(theta [n]_x).
#[derive(Debug, Clone, PartialEq)]
pub struct RotationNode {
    pub theta: f64,
    pub axis: Vector3<f64>,
    pub relative: RotationMatrix,
    pub weight: f64,
}

/// Unit-mass angle-axis product rule for the Haar measure on SO(3).
pub fn rotation_nodes(angle: usize, polar: usize, azimuth: usize) -> Vec<RotationNode> {
    let ang = HaarAngleRule::new(angle);
    let dirs = sphere_nodes(&[0.0, 0.0, 1.0], polar, azimuth);
    let mut out = Vec::with_capacity(angle * dirs.len());
    for (t, wt) in ang.theta.iter().zip(&ang.weights) {
        for d in &dirs {
            let n = Vector3::new(d.v[0], d.v[1], d.v[2]);
            out.push(RotationNode { theta: *t, axis: n, relative: exp_so3(&(n * *t)), weight: wt * d.weight });
        }
    }
    out
}

/// lambda * relative, for evaluating rotation rules around lambda.
pub fn rotate_node(lambda: &RotationMatrix, node: &RotationNode) -> Matrix3<f64> {
    lambda.matrix() * node.relative.matrix()
}
