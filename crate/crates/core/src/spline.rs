//! Piecewise-cubic interpolants on nonuniform grids.

use crate::error::{invalid, Result};

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(invalid("spline needs >= 3 points and matching lengths"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("spline abscissae must be strictly increasing"));
        }
        // tridiagonal system for interior second derivatives
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        let m = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        Ok(Self { x, y, m })
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_all(t).1
    }

    /// Value, first and second derivative at `t`.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let i = self.interval(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let s = a * m0 + b * m1;
        (v, d, s)
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }
}

/// Cubic Hermite interpolant through values and slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || y.len() != x.len() || dy.len() != x.len() {
            return Err(invalid("Hermite table needs >= 2 points and matching lengths"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("Hermite abscissae must be strictly increasing"));
        }
        Ok(Self { x, y, dy })
    }

    /// Shape-preserving interpolant of monotone data, with the harmonic-mean
    /// slopes of the PCHIP scheme.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(invalid("monotone table needs >= 2 points and matching lengths"));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut dy = vec![0.0; n];
        dy[0] = delta[0];
        dy[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                dy[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Self::new(x, y, dy)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]
    }
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / den } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_table_preserves_order() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| if *t < 4.0 { t * 0.01 } else { t * t }).collect();
        let h = HermiteTable::monotone(x, y).unwrap();
        let mut last = f64::NEG_INFINITY;
        for i in 0..=950 {
            let v = h.eval(i as f64 * 0.01);
            assert!(v >= last - 1e-15);
            last = v;
        }
    }

    #[test]
    fn spline_reproduces_lines_and_converges() {
        let x: Vec<f64> = (0..11).map(|i| (i as f64 / 10.0).powi(2)).collect();
        let s = NaturalSpline::new(x.clone(), x.iter().map(|t| 2.0 * t - 1.0).collect()).unwrap();
        assert!((s.eval(0.37) - (-0.26)).abs() < 1e-14);
        assert!((s.derivative(0.5) - 2.0).abs() < 1e-13);

        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| std::f64::consts::PI * i as f64 / n as f64).collect();
            let s = NaturalSpline::new(x.clone(), x.iter().map(|t| t.sin()).collect()).unwrap();
            (0..1000)
                .map(|k| {
                    let t = 0.3 + 2.5 * k as f64 / 1000.0;
                    (s.eval(t) - t.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let r = err(40) / err(80);
        assert!(r > 14.0 && r < 18.0, "ratio {r}");
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 1.0;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let x = vec![0.0, 0.3, 1.0, 2.5];
        let h = HermiteTable::new(x.clone(), x.iter().map(|&t| f(t)).collect(), x.iter().map(|&t| df(t)).collect())
            .unwrap();
        for t in [0.1, 0.7, 1.9, 2.5] {
            assert!((h.eval(t) - f(t)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(NaturalSpline::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(HermiteTable::new(vec![0.0], vec![0.0], vec![0.0]).is_err());
    }
}
