//! Von Mises-Fisher equilibria on S^{d-1} and SO(3).
//!
//! Sphere and rotation measures are normalized to unit mass, so the uniform
//! density is 1 and Z(0) = 1. Normalizations are evaluated in the log domain.

use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Error, Result};
use crate::geometry::{uniform_rotation, RotationMatrix, UnitVector};
use crate::policy::NumericPolicy;
use crate::quadrature::{haar_angle_density, HaarAngleRule, SphereMarginalRule};

type RuleCache<R> = OnceLock<Mutex<HashMap<(usize, usize), Arc<R>>>>;

/// Shared marginal rule for S^{d-1} with `n` nodes.
pub fn marginal_rule(d: usize, n: usize) -> Arc<SphereMarginalRule> {
    static CACHE: RuleCache<SphereMarginalRule> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry((d, n)).or_insert_with(|| Arc::new(SphereMarginalRule::new(d, n))).clone()
}

/// Shared Haar angle rule with `n` nodes.
pub fn angle_rule(n: usize) -> Arc<HaarAngleRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HaarAngleRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry(n).or_insert_with(|| Arc::new(HaarAngleRule::new(n))).clone()
}

pub(crate) fn check_kappa(kappa: f64, policy: &NumericPolicy) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("concentration must be finite and >= 0, got {kappa}")));
    }
    if kappa > policy.kappa_max {
        return Err(Error::KappaOverflow { kappa, max: policy.kappa_max });
    }
    Ok(())
}

/// Moments of the VMF marginal in x = u . v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereMoments {
    pub log_z: f64,
    /// <x>
    pub c1: f64,
    /// <x^2>
    pub x2: f64,
}

impl SphereMoments {
    /// dc1/dkappa = <x^2> - <x>^2.
    pub fn c1_derivative(&self) -> f64 {
        self.x2 - self.c1 * self.c1
    }
}

pub fn sphere_moments(kappa: f64, d: usize) -> Result<SphereMoments> {
    sphere_moments_with(kappa, d, &NumericPolicy::DEFAULT)
}

pub fn sphere_moments_with(kappa: f64, d: usize, policy: &NumericPolicy) -> Result<SphereMoments> {
    check_kappa(kappa, policy)?;
    if d < 2 {
        return Err(invalid("sphere dimension must be >= 2"));
    }
    let rule = marginal_rule(d, policy.polar_nodes);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (&x, &w) in rule.x.iter().zip(&rule.weights) {
        let e = w * (kappa * (x - 1.0)).exp();
        s0 += e;
        s1 += e * x;
        s2 += e * x * x;
    }
    Ok(SphereMoments { log_z: kappa + s0.ln(), c1: s1 / s0, x2: s2 / s0 })
}

/// Z(kappa) with the density exp(kappa u.v)/Z on the unit-mass sphere.
pub fn vmf_normalization(kappa: f64, d: usize) -> Result<f64> {
    Ok(sphere_moments(kappa, d)?.log_z.exp())
}

/// c1(kappa) = <u . v> under M_{kappa u}.
pub fn order_parameter_c1(kappa: f64, d: usize) -> Result<f64> {
    Ok(sphere_moments(kappa, d)?.c1)
}

/// VMF average of F(u . v).
pub fn sphere_average(kappa: f64, d: usize, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = marginal_rule(d, n);
    let (mut num, mut den) = (0.0, 0.0);
    for (&x, &w) in rule.x.iter().zip(&rule.weights) {
        let e = w * (kappa * (x - 1.0)).exp();
        num += e * f(x);
        den += e;
    }
    num / den
}

/// M_{kappa u} on S^{d-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfSphere {
    pub u: UnitVector,
    pub kappa: f64,
    pub d: usize,
    pub log_z: f64,
    pub c1: f64,
}

impl VmfSphere {
    pub fn new(u: UnitVector, kappa: f64) -> Result<Self> {
        Self::with_policy(u, kappa, &NumericPolicy::DEFAULT)
    }

    pub fn with_policy(u: UnitVector, kappa: f64, policy: &NumericPolicy) -> Result<Self> {
        let d = u.dim();
        let m = sphere_moments_with(kappa, d, policy)?;
        Ok(Self { u, kappa, d, log_z: m.log_z, c1: m.c1 })
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn density(&self, v: &[f64]) -> f64 {
        self.density_of_cos(self.u.dot(v))
    }

    pub fn density_of_cos(&self, x: f64) -> f64 {
        (self.kappa * x - self.log_z).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let x = sample_cos(self.kappa, self.d, rng);
        let u = self.u.as_slice();
        let omega = random_orthogonal(u, rng);
        let s = (1.0 - x * x).max(0.0).sqrt();
        let v: Vec<f64> = u.iter().zip(&omega).map(|(a, b)| x * a + s * b).collect();
        UnitVector::normalize(v).expect("unit sample")
    }
}

/// n i.i.d. samples of `dist`.
pub fn sample_vmf<R: Rng + ?Sized>(dist: &VmfSphere, n: usize, rng: &mut R) -> Vec<UnitVector> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Samples x = u . v from the VMF marginal.
pub fn sample_cos<R: Rng + ?Sized>(kappa: f64, d: usize, rng: &mut R) -> f64 {
    if d == 3 {
        let xi: f64 = rng.random();
        if kappa < 1e-12 {
            return 2.0 * xi - 1.0;
        }
        // inverse CDF of exp(kappa x) on [-1, 1]
        return (1.0 + (xi + (1.0 - xi) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0);
    }
    let dm1 = (d - 1) as f64;
    if kappa < 1e-12 {
        // x of a uniform point
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|t| t * t).sum::<f64>().sqrt();
        return g[0] / n;
    }
    // Wood (1994) rejection sampler
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = rand_distr::Beta::new(dm1 / 2.0, dm1 / 2.0).unwrap();
    loop {
        let z: f64 = rng.sample(beta);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let t: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= t.ln() {
            return w;
        }
    }
}

/// A unit vector uniformly distributed on the sphere orthogonal to `u`.
pub(crate) fn random_orthogonal<R: Rng + ?Sized>(u: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..u.len()).map(|_| rng.sample(StandardNormal)).collect();
        let c: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
        let p: Vec<f64> = g.iter().zip(u).map(|(a, b)| a - c * b).collect();
        let n = p.iter().map(|t| t * t).sum::<f64>().sqrt();
        if n > 1e-8 {
            return p.into_iter().map(|t| t / n).collect();
        }
    }
}

/// Angle profile of M_{kappa Lambda}: m(theta) = exp(kappa (1/2 + cos theta)) / Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngleDensity {
    pub kappa: f64,
    pub log_z: f64,
}

impl RotationAngleDensity {
    pub fn m(&self, theta: f64) -> f64 {
        (self.kappa * (0.5 + theta.cos()) - self.log_z).exp()
    }

    pub fn haar(&self, theta: f64) -> f64 {
        haar_angle_density(theta)
    }

    /// m(theta) times the Haar angle density; integrates to 1 on [0, pi].
    pub fn weight(&self, theta: f64) -> f64 {
        self.m(theta) * self.haar(theta)
    }

    /// <F(theta)> under M_{kappa Lambda}.
    pub fn average(&self, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        angle_rule(n).integrate(|t| self.m(t) * f(t))
    }
}

pub fn rotation_angle_density(kappa: f64) -> Result<RotationAngleDensity> {
    rotation_angle_density_with(kappa, &NumericPolicy::DEFAULT)
}

pub fn rotation_angle_density_with(kappa: f64, policy: &NumericPolicy) -> Result<RotationAngleDensity> {
    check_kappa(kappa, policy)?;
    let rule = angle_rule(policy.polar_nodes);
    let s = rule.integrate(|t| (kappa * (t.cos() - 1.0)).exp());
    Ok(RotationAngleDensity { kappa, log_z: 1.5 * kappa + s.ln() })
}

/// M_{kappa Lambda} on SO(3).
#[derive(Debug, Clone, PartialEq)]
pub struct VmfRotation {
    pub lambda: RotationMatrix,
    pub kappa: f64,
    pub angle: RotationAngleDensity,
    pub c1: f64,
}

impl VmfRotation {
    pub fn new(lambda: RotationMatrix, kappa: f64) -> Result<Self> {
        Self::with_policy(lambda, kappa, &NumericPolicy::DEFAULT)
    }

    pub fn with_policy(lambda: RotationMatrix, kappa: f64, policy: &NumericPolicy) -> Result<Self> {
        let angle = rotation_angle_density_with(kappa, policy)?;
        let c1 = rotation_order_parameter_from(&angle, policy.polar_nodes);
        Ok(Self { lambda, kappa, angle, c1 })
    }

    pub fn z(&self) -> f64 {
        self.angle.log_z.exp()
    }

    /// exp(kappa Lambda . A) / Z with Lambda . A = 1/2 Tr(Lambda^T A).
    pub fn density(&self, a: &Matrix3<f64>) -> f64 {
        let dot = 0.5 * self.lambda.matrix().dot(a);
        (self.kappa * dot - self.angle.log_z).exp()
    }

    /// Rejection from the Haar measure with acceptance exp(kappa (cos theta - 1)).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RotationMatrix {
        loop {
            let r = uniform_rotation(rng);
            let c = (r.matrix().trace() - 1.0) / 2.0;
            let t: f64 = rng.random();
            if t <= (self.kappa * (c - 1.0)).exp() {
                return self.lambda.compose(&r);
            }
        }
    }
}

/// c1 for rotations: <Lambda e1 . A e1> = <(1 + 2 cos theta) / 3>.
pub fn rotation_order_parameter(kappa: f64) -> Result<f64> {
    Ok(rotation_order_parameter_from(&rotation_angle_density(kappa)?, NumericPolicy::DEFAULT.polar_nodes))
}

fn rotation_order_parameter_from(angle: &RotationAngleDensity, n: usize) -> f64 {
    angle.average(n, |t| (1.0 + 2.0 * t.cos()) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c1_closed(k: f64) -> f64 {
        1.0 / k.tanh() - 1.0 / k
    }

    #[test]
    fn normalization_examples() {
        for d in 2..6 {
            assert!((vmf_normalization(0.0, d).unwrap() - 1.0).abs() < 1e-14);
        }
        // unit-mass convention: Z = sinh(k)/k on S^2
        let z = vmf_normalization(1.0, 3).unwrap();
        assert!((z - 1f64.sinh()).abs() < 1e-13);
        assert!(matches!(vmf_normalization(201.0, 3), Err(Error::KappaOverflow { .. })));
        assert!(vmf_normalization(-1.0, 3).is_err());
    }

    #[test]
    fn normalization_is_stable_under_node_doubling() {
        for d in [2, 3, 4] {
            for k in [10.0, 100.0] {
                let mut p = NumericPolicy::DEFAULT;
                let a = sphere_moments_with(k, d, &p).unwrap().log_z;
                p.polar_nodes *= 2;
                let b = sphere_moments_with(k, d, &p).unwrap().log_z;
                assert!((a.exp() / b.exp() - 1.0).abs() < 1e-12, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn c1_examples() {
        assert!(order_parameter_c1(0.0, 3).unwrap().abs() < 1e-15);
        assert!((order_parameter_c1(2.0, 3).unwrap() - c1_closed(2.0)).abs() < 1e-12);
        assert!(order_parameter_c1(50.0, 3).unwrap() > 0.97);
    }

    #[test]
    fn c1_is_strictly_increasing() {
        for d in [2, 3, 4] {
            let mut prev = -1.0;
            for i in 0..=200 {
                let c = order_parameter_c1(i as f64 * 0.5, d).unwrap();
                assert!(c > prev && c < 1.0);
                prev = c;
            }
        }
    }

    #[test]
    fn c1_derivative_matches_difference_quotient() {
        let k = 1.7;
        let h = 1e-5;
        let fd = (order_parameter_c1(k + h, 3).unwrap() - order_parameter_c1(k - h, 3).unwrap()) / (2.0 * h);
        let m = sphere_moments(k, 3).unwrap();
        assert!((m.c1_derivative() - fd).abs() < 1e-9);
    }

    #[test]
    fn c1_is_rotation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = order_parameter_c1(3.0, 3).unwrap();
        for _ in 0..5 {
            let u = UnitVector::normalize(random_orthogonal(&[0.0, 0.0, 0.0], &mut rng)).unwrap();
            let dist = VmfSphere::new(u.clone(), 3.0).unwrap();
            let nodes = crate::quadrature::sphere_nodes(u.as_slice(), 128, 64);
            let full: f64 = nodes.iter().map(|n| n.weight * dist.density(&n.v) * u.dot(&n.v)).sum();
            assert!((full - c).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = UnitVector::basis(3, 2);
        let n = 1_000_000;
        let iso = sample_vmf(&VmfSphere::new(u.clone(), 0.0).unwrap(), n, &mut rng);
        let mut mean = [0.0; 3];
        for v in &iso {
            for i in 0..3 {
                mean[i] += v.as_slice()[i] / n as f64;
            }
        }
        assert!(crate::geometry::norm(&mean) < 0.005);

        let dist = VmfSphere::new(u.clone(), 5.0).unwrap();
        let xs: Vec<f64> = sample_vmf(&dist, n, &mut rng).iter().map(|v| u.dot(v.as_slice())).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m - c1_closed(5.0)).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn sampled_cos_passes_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        for (d, k) in [(3, 2.0), (2, 3.0), (4, 1.5)] {
            let mut xs: Vec<f64> = (0..n).map(|_| sample_cos(k, d, &mut rng)).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // analytic CDF by quadrature of the marginal
            let rule = marginal_rule(d, 2048);
            let z: f64 = rule.x.iter().zip(&rule.weights).map(|(x, w)| w * (k * x).exp()).sum();
            let cdf = |t: f64| -> f64 {
                rule.x.iter().zip(&rule.weights).filter(|(x, _)| **x <= t).map(|(x, w)| w * (k * x).exp()).sum::<f64>()
                    / z
            };
            let mut dmax: f64 = 0.0;
            for (i, x) in xs.iter().enumerate().step_by(97) {
                let f = cdf(*x);
                dmax = dmax.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
            }
            // 1% critical value plus the node-spacing error of the step CDF
            assert!(dmax < 1.63 / (n as f64).sqrt() + 2e-3, "d={d}: {dmax}");
        }
    }

    #[test]
    fn rotation_density_examples() {
        let r = rotation_angle_density(0.0).unwrap();
        assert!((r.m(1.0) - 1.0).abs() < 1e-14);
        let g = crate::quadrature::QuadratureRule::gauss_legendre_on(200, 0.0, std::f64::consts::PI);
        assert!((g.integrate(|t| r.haar(t)) - 1.0).abs() < 1e-13);
        let r4 = rotation_angle_density(4.0).unwrap();
        assert!((g.integrate(|t| r4.weight(t)) - 1.0).abs() < 1e-10);
        let argmax = |k: f64| {
            let r = rotation_angle_density(k).unwrap();
            (1..1000)
                .map(|i| i as f64 * std::f64::consts::PI / 1000.0)
                .max_by(|a, b| r.weight(*a).partial_cmp(&r.weight(*b)).unwrap())
                .unwrap()
        };
        assert!(argmax(10.0) < argmax(1.0));
    }

    #[test]
    fn rotation_vmf_normalizes_on_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lambda = uniform_rotation(&mut rng);
        let dist = VmfRotation::new(lambda, 3.0).unwrap();
        let nodes = crate::quadrature::rotation_nodes(96, 12, 12);
        let mass: f64 =
            nodes.iter().map(|n| n.weight * dist.density(&crate::quadrature::rotate_node(&lambda, n))).sum();
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(rotation_order_parameter(0.0).unwrap().abs() < 1e-14);
    }
}
