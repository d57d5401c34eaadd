//! Exponential decay rates toward the isotropic state or the VMF family.

use serde::Serialize;

use super::solver::Trajectory;
use super::state::KineticState;
use crate::error::{invalid, Error, Result};
use crate::vmf::order_parameter_c1;

const MIN_R2: f64 = 0.995;
const MIN_POINTS: usize = 6;
/// Largest relative change of the log-slope across an accepted window.
const MAX_SLOPE_DRIFT: f64 = 0.05;

/// Least-squares fit of log r = a - rate t on one decade of the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r2: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    (slope, r2)
}

/// Relative change of the slope of a quadratic fit across the window.
fn slope_drift(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let s = ti - mt;
        let row = nalgebra::Vector3::new(1.0, s, s * s);
        a += row * row.transpose();
        b += row * yi;
    }
    match a.lu().solve(&b) {
        Some(c) => (2.0 * c[2] * (t[t.len() - 1] - t[0])).abs() / c[1].abs(),
        None => f64::INFINITY,
    }
}

/// Rate of r(t) ~ exp(-rate t) fitted on a one-decade window of the log
/// residual. Windows qualify with R^2 > 0.995 and a slope varying by less
/// than 5% across them; the most linear qualifying window wins, which keeps
/// early multi-mode transients and late noise floors out of the fit.
pub fn fit_decay_window(t: &[f64], r: &[f64]) -> Result<DecayFit> {
    if t.len() != r.len() {
        return Err(invalid("time and residual series differ in length"));
    }
    let pts: Vec<(f64, f64)> =
        t.iter().zip(r).filter(|(_, r)| **r > 0.0 && r.is_finite()).map(|(t, r)| (*t, r.ln())).collect();
    let n = pts.len();
    if n < MIN_POINTS {
        return Err(Error::NoLinearRegime { r2: 0.0 });
    }
    let stride = (n / 400).max(1);
    let decade = std::f64::consts::LN_10;
    let mut best = 0.0f64;
    let mut chosen: Option<DecayFit> = None;
    let mut end = n - 1;
    loop {
        let top = pts[end].1 + decade;
        let mut start = end;
        while start > 0 && pts[start - 1].1 <= top {
            start -= 1;
        }
        // a genuine decade: the window must reach (nearly) one decade up
        let span = pts[start..=end].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) - pts[end].1;
        if end + 1 - start >= MIN_POINTS && span > 0.9 * decade {
            let (tt, yy): (Vec<f64>, Vec<f64>) = pts[start..=end].iter().cloned().unzip();
            let (slope, r2) = linear_fit(&tt, &yy);
            best = best.max(r2);
            let better = chosen.is_none_or(|c| r2 > c.r2);
            if better && r2 > MIN_R2 && slope < 0.0 && slope_drift(&tt, &yy) < MAX_SLOPE_DRIFT {
                chosen = Some(DecayFit { rate: -slope, r2, t_start: tt[0], t_end: tt[tt.len() - 1], points: tt.len() });
            }
        }
        if end < stride + MIN_POINTS {
            break;
        }
        end -= stride;
    }
    chosen.ok_or(Error::NoLinearRegime { r2: best })
}

/// kappa with c1(kappa) = c, by bisection on [0, kappa_hi].
pub fn kappa_from_c1(c: f64, d: usize, kappa_hi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c) {
        return Err(invalid(format!("order parameter must lie in [0, 1), got {c}")));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    if order_parameter_c1(kappa_hi, d)? < c {
        return Err(invalid(format!("order parameter {c} needs kappa beyond {kappa_hi}")));
    }
    let (mut lo, mut hi) = (0.0, kappa_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if order_parameter_c1(mid, d)? < c {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The member rho M_{kappa u} of the family matching |j| = target, with u
/// taken from `direction`.
pub fn family_member(direction: &KineticState, target_j: f64) -> Result<KineticState> {
    let rho = direction.mass();
    let kappa = kappa_from_c1(target_j / rho, direction.dim(), crate::NumericPolicy::DEFAULT.kappa_max)?;
    let angle = direction.direction_angle().unwrap_or(0.0);
    KineticState::vmf(direction.repr, direction.modes, rho, kappa, angle)
}

/// L^2 distances of the recorded states to the limiting equilibrium with
/// |j| = target_j and the final mean direction.
pub fn distances_to_limit(traj: &Trajectory, target_j: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if traj.states.is_empty() {
        return Err(invalid("trajectory was recorded without states"));
    }
    let limit = family_member(&traj.final_state, target_j)?;
    let mut t = Vec::with_capacity(traj.states.len());
    let mut r = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        t.push(s.t);
        r.push(s.l2_distance(&limit)?);
    }
    Ok((t, r))
}

/// Decay rate of ||f(t) - f_inf||_{L^2}, where f_inf is the equilibrium of
/// the same mass with |j| = target_j.
pub fn measure_decay_rate(traj: &Trajectory, target_j: f64) -> Result<DecayFit> {
    let (t, r) = distances_to_limit(traj, target_j)?;
    fit_decay_window(&t, &r)
}
