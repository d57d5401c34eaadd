//! Consistency roots iota(kappa) / c1(kappa) = rho and the critical
//! densities rho_c (kappa -> 0 limit) and rho_* (infimum).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kinetic::CouplingLaw;
use crate::policy::NumericPolicy;
use crate::vmf::sphere_moments_with;

const LOG_POINTS: usize = 3000;
const LINEAR_POINTS: usize = 7000;
const KAPPA_MIN: f64 = 1e-4;

/// iota(kappa) / c1(kappa).
pub fn consistency_ratio(kappa: f64, law: &CouplingLaw, d: usize) -> Result<f64> {
    consistency_ratio_with(kappa, law, d, &NumericPolicy::DEFAULT)
}

pub fn consistency_ratio_with(kappa: f64, law: &CouplingLaw, d: usize, policy: &NumericPolicy) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(invalid(format!("ratio needs kappa > 0, got {kappa}")));
    }
    let c1 = sphere_moments_with(kappa, d, policy)?.c1;
    Ok(law.iota(kappa) / c1)
}

fn check_law(law: &CouplingLaw, d: usize) -> Result<()> {
    if !law.is_invertible() {
        return Err(invalid(format!(
            "law {} has constant k; the consistency analysis needs an invertible k",
            law.id()
        )));
    }
    if law.dim() != d {
        return Err(invalid(format!("law built for d = {} used with d = {d}", law.dim())));
    }
    Ok(())
}

/// iota / c1 tabulated on the production scan grid: log-spaced on
/// [1e-4, 1], then linear up to kappa_max, 10^4 points in all.
#[derive(Debug, Clone)]
pub struct RatioCurve {
    pub kappa: Vec<f64>,
    pub ratio: Vec<f64>,
    law: CouplingLaw,
    d: usize,
    policy: NumericPolicy,
}

impl RatioCurve {
    pub fn new(law: &CouplingLaw, d: usize) -> Result<Self> {
        Self::with_points(law, d, LOG_POINTS, LINEAR_POINTS, &NumericPolicy::DEFAULT)
    }

    /// A scan grid with custom resolution.
    pub fn with_points(
        law: &CouplingLaw,
        d: usize,
        log_points: usize,
        linear_points: usize,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        check_law(law, d)?;
        if log_points < 2 || linear_points < 2 || policy.kappa_max <= 1.0 {
            return Err(invalid("ratio scan needs >= 2 points per segment and kappa_max > 1"));
        }
        let mut kappa: Vec<f64> =
            (0..log_points).map(|i| KAPPA_MIN * (1.0 / KAPPA_MIN).powf(i as f64 / (log_points - 1) as f64)).collect();
        kappa
            .extend((1..linear_points).map(|i| 1.0 + (policy.kappa_max - 1.0) * i as f64 / (linear_points - 1) as f64));
        let ratio =
            kappa.par_iter().map(|&k| consistency_ratio_with(k, law, d, policy)).collect::<Result<Vec<f64>>>()?;
        Ok(Self { kappa, ratio, law: law.clone(), d, policy: *policy })
    }

    fn eval(&self, kappa: f64) -> f64 {
        consistency_ratio_with(kappa, &self.law, self.d, &self.policy).unwrap_or(f64::NAN)
    }

    /// Solutions of the consistency condition at density rho: 0 first (the
    /// isotropic state), then every positive root found by sign changes on
    /// the grid, refined by bisection to 1e-12 relative.
    pub fn roots(&self, rho: f64) -> Result<Vec<f64>> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(invalid(format!("density must be finite and > 0, got {rho}")));
        }
        let last = *self.ratio.last().unwrap();
        if last < rho {
            return Err(Error::RangeExhausted { kappa_max: *self.kappa.last().unwrap(), ratio: last, rho });
        }
        let mut out = vec![0.0];
        for i in 0..self.kappa.len() - 1 {
            let (a, b) = (self.ratio[i] - rho, self.ratio[i + 1] - rho);
            if a == 0.0 {
                out.push(self.kappa[i]);
            } else if a * b < 0.0 {
                out.push(self.bisect(self.kappa[i], self.kappa[i + 1], rho, a));
            }
        }
        Ok(out)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, rho: f64, g_lo: f64) -> f64 {
        let s = g_lo.signum();
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            let g = self.eval(mid) - rho;
            if g == 0.0 {
                return mid;
            }
            if g.signum() == s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Grid minimum refined by golden-section search: (kappa, ratio).
    fn interior_minimum(&self) -> (usize, f64, f64) {
        let i = self.ratio.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).map(|(i, _)| i).unwrap();
        if i == 0 || i == self.kappa.len() - 1 {
            return (i, self.kappa[i], self.ratio[i]);
        }
        let (mut a, mut b) = (self.kappa[i - 1], self.kappa[i + 1]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let (mut fc, mut fe) = (self.eval(c), self.eval(e));
        while b - a > 1e-10 * b {
            if fc < fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = self.eval(e);
            }
        }
        let k = 0.5 * (a + b);
        (i, k, self.eval(k))
    }
}

/// Solutions of the consistency condition at density rho (0 listed first).
pub fn consistency_roots(rho: f64, law: &CouplingLaw, d: usize) -> Result<Vec<f64>> {
    RatioCurve::new(law, d)?.roots(rho)
}

/// Number of positive roots just below and just above rho_c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub below: usize,
    pub above: usize,
}

impl ParityReport {
    /// Even below and odd above, as expected near a non-degenerate rho_c.
    pub fn is_consistent(&self) -> bool {
        self.below.is_multiple_of(2) && self.above % 2 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub law_id: String,
    pub d: usize,
    /// None when iota / c1 diverges as kappa -> 0 (rho_c = +inf).
    pub rho_c: Option<f64>,
    pub rho_star: f64,
    /// Minimizer of iota / c1 when it is interior.
    pub kappa_star: Option<f64>,
    /// Root counts at rho_c (1 -+ 1e-2); absent for infinite rho_c.
    pub parity: Option<ParityReport>,
}

/// rho_c by Richardson extrapolation of iota / c1 at kappa = 0.1 * 2^-k;
/// None when the ratio diverges.
pub fn critical_density(law: &CouplingLaw, d: usize) -> Result<Option<f64>> {
    critical_density_with(law, d, &NumericPolicy::DEFAULT)
}

pub fn critical_density_with(law: &CouplingLaw, d: usize, policy: &NumericPolicy) -> Result<Option<f64>> {
    check_law(law, d)?;
    const LEVELS: usize = 7;
    let samples: Vec<f64> = (0..LEVELS)
        .map(|k| consistency_ratio_with(0.1 * 0.5f64.powi(k as i32), law, d, policy))
        .collect::<Result<_>>()?;
    // divergence: the ratio keeps growing geometrically as kappa halves
    let growth: Vec<f64> = samples.windows(2).map(|w| w[1] / w[0]).collect();
    if growth[growth.len() - 3..].iter().all(|&g| g > 1.2) || samples[LEVELS - 1] > 1e12 {
        return Ok(None);
    }
    let mut table = vec![samples.clone()];
    for m in 1..LEVELS {
        let prev = &table[m - 1];
        let f = 2f64.powi(m as i32) - 1.0;
        table.push((1..prev.len()).map(|k| prev[k] + (prev[k] - prev[k - 1]) / f).collect());
    }
    // diagonal estimates; the last columns only amplify rounding
    let diag: Vec<f64> = (0..5).map(|m| *table[m].last().unwrap()).collect();
    let (a, b) = (diag[3], diag[4]);
    if (a - b).abs() > 1e-6 * b.abs() {
        return Err(Error::ExtrapolationUnstable { a, b });
    }
    Ok(Some(b))
}

pub fn critical_densities(law: &CouplingLaw, d: usize) -> Result<PhaseDiagram> {
    phase_diagram(&RatioCurve::new(law, d)?)
}

/// rho_c, rho_* and the parity report from a tabulated ratio curve.
pub fn phase_diagram(curve: &RatioCurve) -> Result<PhaseDiagram> {
    let rho_c = critical_density_with(&curve.law, curve.d, &curve.policy)?;
    let (i, kappa_min, ratio_min) = curve.interior_minimum();
    let (rho_star, kappa_star) = match rho_c {
        // the infimum is approached as kappa -> 0
        Some(rc) if i == 0 || ratio_min >= rc => (rc, None),
        _ => (ratio_min, (i > 0 && i + 1 < curve.kappa.len()).then_some(kappa_min)),
    };
    if let Some(rc) = rho_c {
        if rho_star > rc * (1.0 + 1e-12) {
            return Err(Error::NoConvergence(format!("rho_* = {rho_star} exceeds rho_c = {rc}")));
        }
    }
    let parity = match rho_c {
        Some(rc) => {
            Some(ParityReport { below: curve.roots(rc * 0.99)?.len() - 1, above: curve.roots(rc * 1.01)?.len() - 1 })
        }
        None => None,
    };
    Ok(PhaseDiagram { law_id: curve.law.id().to_string(), d: curve.d, rho_c, rho_star, kappa_star, parity })
}
