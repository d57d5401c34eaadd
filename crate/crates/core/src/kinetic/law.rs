//! Coupling laws nu(|j|), tau(|j|) and the derived maps k = nu / tau,
//! its primitive Phi and its inverse iota.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::quadrature::QuadratureRule;
use crate::spline::HermiteTable;
use crate::vmf::order_parameter_c1;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const TABLE_POINTS: usize = 401;
const PRIMITIVE_NODES: usize = 64;

/// Serializable selection of the built-in laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    /// nu = nu0 |j|, tau = tau0, so k(|j|) = (nu0 / tau0) |j|.
    Linear {
        #[serde(default = "one")]
        nu0: f64,
        #[serde(default = "one")]
        tau0: f64,
    },
    /// iota(kappa) = c1(kappa) (3 - kappa + kappa^2 / 4), tau = 1: iota / c1
    /// dips from 3 at kappa = 0 to 2 at kappa = 2.
    Tuned,
    /// k = |j| + a |j|^3, tau = tau0.
    Cubic {
        a: f64,
        #[serde(default = "one")]
        tau0: f64,
    },
    /// k = exp(|j|) - 1, tau = 1.
    Exponential,
    /// k = |j|^2, tau = 1; iota / c1 diverges at kappa = 0.
    Quadratic,
    /// nu = nu0, tau = tau0 independent of |j|: the classical model. k is
    /// constant, so iota and the phase analysis are unavailable.
    Constant {
        #[serde(default = "one")]
        nu0: f64,
        #[serde(default = "one")]
        tau0: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl LawSpec {
    pub fn build(&self, d: usize) -> Result<CouplingLaw> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("law parameter {name} must be finite and > 0, got {v}")))
            }
        };
        match *self {
            LawSpec::Linear { nu0, tau0 } => {
                positive("nu0", nu0)?;
                positive("tau0", tau0)?;
                CouplingLaw::linear(nu0, tau0, d)
            }
            LawSpec::Tuned => CouplingLaw::tuned(d),
            LawSpec::Cubic { a, tau0 } => {
                positive("a", a)?;
                positive("tau0", tau0)?;
                CouplingLaw::from_functions(
                    format!("cubic(a={a},tau0={tau0})"),
                    d,
                    Arc::new(move |r| tau0 * (r + a * r * r * r)),
                    Arc::new(move |_| tau0),
                    10.0,
                )
            }
            LawSpec::Exponential => {
                CouplingLaw::from_functions("exponential".into(), d, Arc::new(f64::exp_m1), Arc::new(|_| 1.0), 8.0)
            }
            LawSpec::Constant { nu0, tau0 } => {
                if !(nu0 >= 0.0 && nu0.is_finite()) {
                    return Err(invalid(format!("law parameter nu0 must be finite and >= 0, got {nu0}")));
                }
                positive("tau0", tau0)?;
                Ok(CouplingLaw::constant(nu0, tau0, d))
            }
            LawSpec::Quadratic => {
                CouplingLaw::from_functions("quadratic".into(), d, Arc::new(|r| r * r), Arc::new(|_| 1.0), 20.0)
            }
        }
    }
}

/// Increasing map with g(0) = 0, inverted by table lookup and a bracketed
/// secant polish.
#[derive(Clone)]
struct MonotoneMap {
    g: ScalarFn,
    xs: Vec<f64>,
    ys: Vec<f64>,
    guess: HermiteTable,
}

impl MonotoneMap {
    fn new(g: ScalarFn, x_max: f64) -> Result<Self> {
        let xs: Vec<f64> = (0..TABLE_POINTS).map(|i| x_max * (i as f64 / (TABLE_POINTS - 1) as f64).powi(2)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        if ys[0].abs() > 1e-14 {
            return Err(invalid(format!("coupling map must vanish at 0, got {}", ys[0])));
        }
        if let Some(i) = ys.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("coupling map is not strictly increasing near {}", xs[i + 1])));
        }
        let guess = HermiteTable::monotone(ys.clone(), xs.clone())?;
        Ok(Self { g, xs, ys, guess })
    }

    fn eval(&self, x: f64) -> f64 {
        (self.g)(x)
    }

    fn invert(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let n = self.ys.len();
        let (mut lo, mut hi, x) = if y <= self.ys[n - 1] {
            let i = self.ys.partition_point(|&v| v < y).clamp(1, n - 1);
            (self.xs[i - 1], self.xs[i], self.guess.eval(y))
        } else {
            // guarded extrapolation: the map is increasing, so doubling brackets y
            let mut lo = self.xs[n - 1];
            let mut hi = 2.0 * lo;
            let mut k = 0;
            while self.eval(hi) < y && k < 200 {
                lo = hi;
                hi *= 2.0;
                k += 1;
            }
            (lo, hi, 0.5 * (lo + hi))
        };
        let mut glo = self.eval(lo) - y;
        let mut ghi = self.eval(hi) - y;
        // the table guess usually lands close; use it to tighten the bracket
        if x > lo && x < hi {
            let gx = self.eval(x) - y;
            if gx == 0.0 {
                return x;
            }
            if gx < 0.0 {
                lo = x;
                glo = gx;
            } else {
                hi = x;
                ghi = gx;
            }
        }
        // Illinois false position
        let mut side = 0i8;
        for _ in 0..200 {
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let x = (lo * ghi - hi * glo) / (ghi - glo);
            let x = if x > lo && x < hi { x } else { 0.5 * (lo + hi) };
            let gx = self.eval(x) - y;
            if gx == 0.0 {
                return x;
            }
            if gx < 0.0 {
                lo = x;
                glo = gx;
                if side == -1 {
                    ghi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                ghi = gx;
                if side == 1 {
                    glo *= 0.5;
                }
                side = 1;
            }
        }
        if glo.abs() < ghi.abs() {
            lo
        } else {
            hi
        }
    }
}

#[derive(Clone)]
enum Kind {
    Constant {
        nu0: f64,
        tau0: f64,
    },
    Linear {
        nu0: f64,
        tau0: f64,
    },
    /// k given through nu and tau; iota by inversion.
    Forward {
        nu: ScalarFn,
        tau: ScalarFn,
        k: MonotoneMap,
    },
    /// iota given; k by inversion, tau constant.
    Inverse {
        iota: MonotoneMap,
        tau0: f64,
    },
}

/// nu and tau as functions of |j|, with k = nu / tau strictly increasing and
/// onto [0, inf).
#[derive(Clone)]
pub struct CouplingLaw {
    id: String,
    d: usize,
    kind: Kind,
}

impl fmt::Debug for CouplingLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CouplingLaw").field("id", &self.id).field("d", &self.d).finish()
    }
}

impl CouplingLaw {
    pub fn linear(nu0: f64, tau0: f64, d: usize) -> Result<Self> {
        Ok(Self { id: format!("linear(nu0={nu0},tau0={tau0})"), d, kind: Kind::Linear { nu0, tau0 } })
    }

    /// Constant coefficients; the only law here without an inverse iota.
    pub fn constant(nu0: f64, tau0: f64, d: usize) -> Self {
        Self { id: format!("constant(nu0={nu0},tau0={tau0})"), d, kind: Kind::Constant { nu0, tau0 } }
    }

    /// False for constant k, where iota and the consistency analysis are undefined.
    pub fn is_invertible(&self) -> bool {
        !matches!(self.kind, Kind::Constant { .. })
    }

    /// The non-monotone benchmark law, iota = c1 (3 - kappa + kappa^2 / 4).
    pub fn tuned(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(invalid("sphere dimension must be >= 2"));
        }
        let g: ScalarFn = Arc::new(move |kappa: f64| {
            let c1 = order_parameter_c1(kappa, d).unwrap_or(1.0);
            c1 * (3.0 - kappa + 0.25 * kappa * kappa)
        });
        Ok(Self { id: "tuned".into(), d, kind: Kind::Inverse { iota: MonotoneMap::new(g, 60.0)?, tau0: 1.0 } })
    }

    /// A law from user functions; k = nu / tau is tabulated on [0, r_table]
    /// and must be strictly increasing there.
    pub fn from_functions(id: String, d: usize, nu: ScalarFn, tau: ScalarFn, r_table: f64) -> Result<Self> {
        let (n2, t2) = (nu.clone(), tau.clone());
        let k = MonotoneMap::new(Arc::new(move |r| n2(r) / t2(r)), r_table)?;
        Ok(Self { id, d, kind: Kind::Forward { nu, tau, k } })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn nu(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Constant { nu0, .. } => *nu0,
            Kind::Linear { nu0, .. } => nu0 * r,
            Kind::Forward { nu, .. } => nu(r),
            Kind::Inverse { iota, tau0 } => tau0 * iota.invert(r),
        }
    }

    pub fn tau(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Constant { tau0, .. } | Kind::Linear { tau0, .. } | Kind::Inverse { tau0, .. } => *tau0,
            Kind::Forward { tau, .. } => tau(r),
        }
    }

    /// k = nu / tau.
    pub fn k(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Constant { nu0, tau0 } => nu0 / tau0,
            Kind::Linear { nu0, tau0 } => nu0 / tau0 * r,
            Kind::Forward { k, .. } => k.eval(r),
            Kind::Inverse { iota, .. } => iota.invert(r),
        }
    }

    /// Inverse of k; NaN for constant laws.
    pub fn iota(&self, kappa: f64) -> f64 {
        match &self.kind {
            Kind::Constant { .. } => f64::NAN,
            Kind::Linear { nu0, tau0 } => tau0 / nu0 * kappa,
            Kind::Forward { k, .. } => k.invert(kappa),
            Kind::Inverse { iota, .. } => iota.eval(kappa),
        }
    }

    /// Phi(r), the primitive of k vanishing at 0.
    pub fn phi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Constant { nu0, tau0 } => nu0 / tau0 * r,
            Kind::Linear { nu0, tau0 } => 0.5 * nu0 / tau0 * r * r,
            Kind::Forward { k, .. } => {
                QuadratureRule::gauss_legendre_on(PRIMITIVE_NODES, 0.0, r).integrate(|s| k.eval(s))
            }
            Kind::Inverse { iota, .. } => {
                // integral of an inverse function: r k(r) - int_0^{k(r)} iota
                let kr = iota.invert(r);
                r * kr - QuadratureRule::gauss_legendre_on(PRIMITIVE_NODES, 0.0, kr).integrate(|s| iota.eval(s))
            }
        }
    }

    /// iota'(kappa) by Richardson-improved centered differences.
    pub fn iota_derivative(&self, kappa: f64) -> f64 {
        if let Kind::Linear { nu0, tau0 } = self.kind {
            return tau0 / nu0;
        }
        let h = (1e-4 * (1.0 + kappa)).min(0.25 * kappa.max(1e-6));
        let c = |h: f64| (self.iota(kappa + h) - self.iota(kappa - h)) / (2.0 * h);
        (4.0 * c(0.5 * h) - c(h)) / 3.0
    }

    /// Checks monotonicity of k and iota(k(r)) = r on a grid of [0, r_max].
    pub fn check_invariants(&self, r_max: f64) -> Result<()> {
        if !self.is_invertible() {
            return Err(invalid(format!("{}: k is constant and has no inverse", self.id)));
        }
        let n = 1000;
        let mut last = -1.0;
        for i in 0..=n {
            let r = r_max * i as f64 / n as f64;
            let k = self.k(r);
            if i == 0 && k.abs() > 1e-14 {
                return Err(invalid(format!("{}: k(0) = {k} is not 0", self.id)));
            }
            if !(k > last) {
                return Err(invalid(format!("{}: k is not strictly increasing at |j| = {r}", self.id)));
            }
            last = k;
            let back = self.iota(k);
            if (back - r).abs() > 1e-10 * r.max(1.0) {
                return Err(invalid(format!("{}: iota(k({r})) = {back}", self.id)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws(d: usize) -> Vec<CouplingLaw> {
        [
            LawSpec::Linear { nu0: 2.0, tau0: 0.5 },
            LawSpec::Tuned,
            LawSpec::Cubic { a: 0.5, tau0: 1.0 },
            LawSpec::Exponential,
            LawSpec::Quadratic,
        ]
        .iter()
        .map(|s| s.build(d).unwrap())
        .collect()
    }

    #[test]
    fn benchmark_laws_satisfy_invariants() {
        for d in [2, 3] {
            for law in laws(d) {
                law.check_invariants(10.0).unwrap();
                // past the table the guarded extrapolation still inverts
                let r = 40.0;
                assert!((law.iota(law.k(r)) - r).abs() < 1e-10 * r, "{}", law.id());
            }
        }
    }

    #[test]
    fn primitive_matches_k() {
        for law in laws(3) {
            for r in [0.3, 1.0, 2.5] {
                let h = 1e-4;
                let dphi = (law.phi(r + h) - law.phi(r - h)) / (2.0 * h);
                assert!((dphi - law.k(r)).abs() < 1e-7 * (1.0 + law.k(r)), "{} at {r}", law.id());
            }
        }
    }

    #[test]
    fn nu_over_tau_is_k() {
        for law in laws(3) {
            for r in [0.0, 0.7, 3.0] {
                assert!((law.nu(r) / law.tau(r) - law.k(r)).abs() < 1e-12 * (1.0 + law.k(r)));
            }
        }
    }

    #[test]
    fn iota_derivative_of_tuned_law() {
        let law = CouplingLaw::tuned(3).unwrap();
        let kappa = 1.5f64;
        let c1 = 1.0 / kappa.tanh() - 1.0 / kappa;
        let dc1 = 1.0 / (kappa * kappa) - 1.0 / kappa.sinh().powi(2);
        let q = 3.0 - kappa + 0.25 * kappa * kappa;
        let exact = dc1 * q + c1 * (0.5 * kappa - 1.0);
        assert!((law.iota_derivative(kappa) - exact).abs() < 1e-9);
    }

    #[test]
    fn non_monotone_law_is_rejected() {
        let err =
            CouplingLaw::from_functions("bad".into(), 3, Arc::new(|r| r * (r - 1.0).powi(2)), Arc::new(|_| 1.0), 3.0);
        assert!(err.is_err());
    }

    #[test]
    fn law_spec_round_trips() {
        let s = LawSpec::Cubic { a: 0.25, tau0: 2.0 };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<LawSpec>(&j).unwrap(), s);
    }
}
