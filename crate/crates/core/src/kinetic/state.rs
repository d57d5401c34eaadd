//! Spectral densities on the circle (Fourier) and axisymmetric densities on
//! S^2 (Legendre in cos theta about e_1). Integrals use the unit-mass measure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::vmf::{marginal_rule, sphere_moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// d = 2: f = a_0 + sum_m (a_m cos m theta + b_m sin m theta), stored as
    /// [a_0, a_1, b_1, ..., a_M, b_M].
    Fourier,
    /// d = 3: f = sum_l a_l P_l(cos theta), theta measured from e_1.
    Legendre,
}

impl Representation {
    pub fn for_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Self::Fourier),
            3 => Ok(Self::Legendre),
            _ => Err(invalid(format!("kinetic solver supports d = 2 or 3, got {d}"))),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Fourier => 2,
            Self::Legendre => 3,
        }
    }

    /// Number of stored coefficients for `modes` harmonics.
    pub fn len(self, modes: usize) -> usize {
        match self {
            Self::Fourier => 2 * modes + 1,
            Self::Legendre => modes + 1,
        }
    }
}

/// P_0..P_n and their derivatives at x.
pub(crate) fn legendre_table(n: usize, x: f64, p: &mut [f64], dp: &mut [f64]) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if n == 0 {
        return;
    }
    p[1] = x;
    dp[1] = 1.0;
    for l in 1..n {
        let lf = l as f64;
        p[l + 1] = ((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0);
        dp[l + 1] = dp[l - 1] + (2.0 * lf + 1.0) * p[l];
    }
}

/// Quadrature samples of a state: chart coordinate, weight, f, df, the
/// metric factor |grad|^2 = metric * d^2 and v . e for the reference axis.
#[derive(Debug, Clone)]
pub(crate) struct Samples {
    pub w: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub metric: Vec<f64>,
    /// chart coordinate: cos theta (Legendre) or theta (Fourier)
    pub s: Vec<f64>,
}

/// A density on S^{d-1} in spectral form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticState {
    pub repr: Representation,
    pub modes: usize,
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn zeros(repr: Representation, modes: usize) -> Result<Self> {
        if modes < 2 {
            return Err(invalid("kinetic state needs at least 2 modes"));
        }
        Ok(Self { repr, modes, coeffs: vec![0.0; repr.len(modes)], t: 0.0 })
    }

    pub fn uniform(repr: Representation, modes: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let mut s = Self::zeros(repr, modes)?;
        s.coeffs[0] = rho;
        Ok(s)
    }

    /// rho M_{kappa u} with u at angle `angle` from e_1 (Legendre: 0 or pi).
    pub fn vmf(repr: Representation, modes: usize, rho: f64, kappa: f64, angle: f64) -> Result<Self> {
        check_rho(rho)?;
        let m = sphere_moments(kappa, repr.dim())?;
        let sign = match repr {
            Representation::Legendre => {
                let c = angle.cos();
                if (c.abs() - 1.0).abs() > 1e-12 {
                    return Err(invalid("axisymmetric states need the mean direction on the axis"));
                }
                c.signum()
            }
            Representation::Fourier => 1.0,
        };
        let log_z = m.log_z;
        Self::from_fn(repr, modes, |th| {
            let x = match repr {
                Representation::Legendre => sign * th.cos(),
                Representation::Fourier => (th - angle).cos(),
            };
            rho * (kappa * x - log_z).exp()
        })
    }

    /// Spectral projection of f(theta), oversampled.
    pub fn from_fn(repr: Representation, modes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut s = Self::zeros(repr, modes)?;
        let n = quadrature_size(repr, modes).max(256);
        match repr {
            Representation::Legendre => {
                let rule = marginal_rule(3, n);
                let (mut p, mut dp) = (vec![0.0; modes + 1], vec![0.0; modes + 1]);
                for (&x, &w) in rule.x.iter().zip(&rule.weights) {
                    legendre_table(modes, x, &mut p, &mut dp);
                    let fx = w * f(x.clamp(-1.0, 1.0).acos());
                    for l in 0..=modes {
                        s.coeffs[l] += (2 * l + 1) as f64 * fx * p[l];
                    }
                }
            }
            Representation::Fourier => {
                for i in 0..n {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    let fx = f(th) / n as f64;
                    s.coeffs[0] += fx;
                    for m in 1..=modes {
                        let (sn, cs) = (m as f64 * th).sin_cos();
                        s.coeffs[2 * m - 1] += 2.0 * fx * cs;
                        s.coeffs[2 * m] += 2.0 * fx * sn;
                    }
                }
            }
        }
        Ok(s)
    }

    /// Angles of the collocation nodes used by [`Self::from_node_values`].
    pub fn collocation_angles(repr: Representation, modes: usize) -> Vec<f64> {
        match repr {
            Representation::Legendre => marginal_rule(3, modes + 1).x.iter().map(|x| x.acos()).collect(),
            Representation::Fourier => {
                let n = 2 * modes + 1;
                (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
            }
        }
    }

    /// The interpolant through values at [`Self::collocation_angles`].
    pub fn from_node_values(repr: Representation, modes: usize, values: &[f64]) -> Result<Self> {
        let angles = Self::collocation_angles(repr, modes);
        if values.len() != angles.len() {
            return Err(invalid(format!("expected {} node values, got {}", angles.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("node values must be finite"));
        }
        let mut s = Self::zeros(repr, modes)?;
        match repr {
            Representation::Legendre => {
                let rule = marginal_rule(3, modes + 1);
                let (mut p, mut dp) = (vec![0.0; modes + 1], vec![0.0; modes + 1]);
                for ((&x, &w), &v) in rule.x.iter().zip(&rule.weights).zip(values) {
                    legendre_table(modes, x, &mut p, &mut dp);
                    for l in 0..=modes {
                        s.coeffs[l] += (2 * l + 1) as f64 * w * v * p[l];
                    }
                }
            }
            Representation::Fourier => {
                let n = angles.len() as f64;
                for (&th, &v) in angles.iter().zip(values) {
                    s.coeffs[0] += v / n;
                    for m in 1..=modes {
                        let (sn, cs) = (m as f64 * th).sin_cos();
                        s.coeffs[2 * m - 1] += 2.0 * v * cs / n;
                        s.coeffs[2 * m] += 2.0 * v * sn / n;
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.repr.dim()
    }

    pub fn mass(&self) -> f64 {
        self.coeffs[0]
    }

    /// j_f as a vector in R^d (e_1 first).
    pub fn current(&self) -> Vec<f64> {
        match self.repr {
            Representation::Legendre => vec![self.coeffs[1] / 3.0, 0.0, 0.0],
            Representation::Fourier => vec![0.5 * self.coeffs[1], 0.5 * self.coeffs[2]],
        }
    }

    pub fn j_norm(&self) -> f64 {
        self.current().iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Angle of u_f from e_1, or None when j_f vanishes.
    pub fn direction_angle(&self) -> Option<f64> {
        let j = self.current();
        if j.iter().all(|a| *a == 0.0) {
            return None;
        }
        Some(j[1].atan2(j[0]))
    }

    /// f at the angle theta (polar angle from e_1 in the Legendre case).
    pub fn eval(&self, theta: f64) -> f64 {
        match self.repr {
            Representation::Legendre => {
                let (mut p, mut dp) = (vec![0.0; self.modes + 1], vec![0.0; self.modes + 1]);
                legendre_table(self.modes, theta.cos(), &mut p, &mut dp);
                self.coeffs.iter().zip(&p).map(|(a, p)| a * p).sum()
            }
            Representation::Fourier => {
                let mut v = self.coeffs[0];
                for m in 1..=self.modes {
                    let (sn, cs) = (m as f64 * theta).sin_cos();
                    v += self.coeffs[2 * m - 1] * cs + self.coeffs[2 * m] * sn;
                }
                v
            }
        }
    }

    /// Complex Fourier coefficients c_0..c_M with f = sum_m c_m e^{i m theta}.
    pub(crate) fn complex_modes(&self) -> Vec<Complex64> {
        debug_assert_eq!(self.repr, Representation::Fourier);
        let mut c = vec![Complex64::new(self.coeffs[0], 0.0)];
        for m in 1..=self.modes {
            c.push(Complex64::new(0.5 * self.coeffs[2 * m - 1], -0.5 * self.coeffs[2 * m]));
        }
        c
    }

    pub(crate) fn set_complex_modes(&mut self, c: &[Complex64]) {
        self.coeffs[0] = c[0].re;
        for m in 1..=self.modes {
            self.coeffs[2 * m - 1] = 2.0 * c[m].re;
            self.coeffs[2 * m] = -2.0 * c[m].im;
        }
    }

    /// Rotates a circle density by `alpha`.
    pub fn rotated(&self, alpha: f64) -> Result<Self> {
        if self.repr != Representation::Fourier {
            return Err(invalid("only circle densities can be rotated in place"));
        }
        let mut c = self.complex_modes();
        for (m, cm) in c.iter_mut().enumerate() {
            *cm *= Complex64::from_polar(1.0, -(m as f64) * alpha);
        }
        let mut out = self.clone();
        out.set_complex_modes(&c);
        Ok(out)
    }

    /// Squared L^2 norm weights of the stored coefficients.
    fn norm_weight(&self, i: usize) -> f64 {
        match self.repr {
            Representation::Legendre => 1.0 / (2 * i + 1) as f64,
            Representation::Fourier => {
                if i == 0 {
                    1.0
                } else {
                    0.5
                }
            }
        }
    }

    /// L^2 norm for the unit-mass measure.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, a)| self.norm_weight(i) * a * a).sum::<f64>().sqrt()
    }

    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.repr != other.repr || self.modes != other.modes {
            return Err(invalid("states use different representations"));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| self.norm_weight(i) * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub(crate) fn samples(&self) -> Samples {
        let n = quadrature_size(self.repr, self.modes);
        match self.repr {
            Representation::Legendre => {
                let rule = marginal_rule(3, n);
                let l = self.modes;
                let (mut p, mut dp) = (vec![0.0; l + 1], vec![0.0; l + 1]);
                let mut out = Samples {
                    w: rule.weights.clone(),
                    f: Vec::with_capacity(n),
                    df: Vec::with_capacity(n),
                    metric: Vec::with_capacity(n),
                    s: rule.x.clone(),
                };
                for &x in &rule.x {
                    legendre_table(l, x, &mut p, &mut dp);
                    out.f.push(self.coeffs.iter().zip(&p).map(|(a, b)| a * b).sum());
                    out.df.push(self.coeffs.iter().zip(&dp).map(|(a, b)| a * b).sum());
                    out.metric.push(1.0 - x * x);
                }
                out
            }
            Representation::Fourier => {
                let mut out = Samples {
                    w: vec![1.0 / n as f64; n],
                    f: Vec::with_capacity(n),
                    df: Vec::with_capacity(n),
                    metric: vec![1.0; n],
                    s: Vec::with_capacity(n),
                };
                for i in 0..n {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    let (mut f, mut df) = (self.coeffs[0], 0.0);
                    for m in 1..=self.modes {
                        let mf = m as f64;
                        let (sn, cs) = (mf * th).sin_cos();
                        let (a, b) = (self.coeffs[2 * m - 1], self.coeffs[2 * m]);
                        f += a * cs + b * sn;
                        df += mf * (b * cs - a * sn);
                    }
                    out.f.push(f);
                    out.df.push(df);
                    out.s.push(th);
                }
                out
            }
        }
    }

    /// Smallest value of f over the oversampled quadrature nodes.
    pub fn min_node_value(&self) -> f64 {
        self.samples().f.into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("density must be finite and > 0, got {rho}")))
    }
}

/// Oversampled node count for nonlinear integrands such as f log f.
fn quadrature_size(repr: Representation, modes: usize) -> usize {
    match repr {
        Representation::Legendre => (4 * (modes + 1)).max(64),
        Representation::Fourier => (4 * modes + 4).max(64),
    }
}
