//! Phase-structure checks against closed forms and brute-force scans.

use sohkit::kinetic::{CouplingLaw, LawSpec};
use sohkit::phase::*;
use sohkit::{Error, NumericPolicy};

fn c1_closed(k: f64) -> f64 {
    1.0 / k.tanh() - 1.0 / k
}

fn linear(d: usize) -> CouplingLaw {
    LawSpec::Linear { nu0: 1.0, tau0: 1.0 }.build(d).unwrap()
}

#[test]
fn linear_law_roots() {
    let law = linear(3);
    let curve = RatioCurve::new(&law, 3).unwrap();
    assert_eq!(curve.roots(2.0).unwrap(), vec![0.0]);
    let roots = curve.roots(4.0).unwrap();
    assert_eq!(roots.len(), 2);
    let k = roots[1];
    assert!((k / c1_closed(k) - 4.0).abs() < 1e-11, "{}", k / c1_closed(k));
    // kappa / c1 increases from 3: checked on the closed form
    let mut last = 3.0;
    for i in 1..2000 {
        let k = i as f64 * 0.05;
        let r = k / c1_closed(k);
        assert!(r > last);
        last = r;
    }
}

#[test]
fn critical_densities_of_monotone_laws() {
    for d in [2usize, 3] {
        let pd = critical_densities(&linear(d), d).unwrap();
        let rc = pd.rho_c.unwrap();
        // c1 ~ kappa / d at small kappa
        assert!((rc - d as f64).abs() < 1e-6, "d = {d}: {rc}");
        assert_eq!(pd.rho_star, rc);
        assert_eq!(pd.parity, Some(ParityReport { below: 0, above: 1 }));
    }
    let law = LawSpec::Linear { nu0: 2.0, tau0: 0.5 }.build(3).unwrap();
    assert!((critical_density(&law, 3).unwrap().unwrap() - 0.75).abs() < 1e-7);
}

#[test]
fn tuned_law_has_hysteresis() {
    let law = CouplingLaw::tuned(3).unwrap();
    let curve = RatioCurve::new(&law, 3).unwrap();
    let pd = phase_diagram(&curve).unwrap();
    assert!((pd.rho_c.unwrap() - 3.0).abs() < 1e-6);
    // dense-grid minimum as the oracle
    let dense = (1..=400_000)
        .map(|i| i as f64 * 1e-5)
        .map(|k| consistency_ratio(k, &law, 3).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((pd.rho_star - dense).abs() < 1e-6, "{} vs {dense}", pd.rho_star);
    assert!(pd.rho_star < pd.rho_c.unwrap());
    assert!(pd.parity.unwrap().is_consistent(), "{:?}", pd.parity);
    let r = curve.roots(2.5).unwrap();
    assert_eq!(r.len(), 3);
    assert!((r[1] - (2.0 - 2f64.sqrt())).abs() < 1e-9 && (r[2] - (2.0 + 2f64.sqrt())).abs() < 1e-9);
    let r = curve.roots(4.0).unwrap();
    assert_eq!(r.len(), 2);
    assert!((r[1] - (2.0 + 8f64.sqrt())).abs() < 1e-9);
    assert_eq!(curve.roots(1.9).unwrap(), vec![0.0]);
}

#[test]
fn infinite_critical_density_is_flagged() {
    let law = LawSpec::Quadratic.build(3).unwrap();
    let pd = critical_densities(&law, 3).unwrap();
    assert_eq!(pd.rho_c, None);
    assert!(pd.rho_star.is_finite() && pd.kappa_star.is_some());
}

#[test]
fn range_exhaustion_is_reported() {
    let policy = NumericPolicy { kappa_max: 5.0, ..NumericPolicy::DEFAULT };
    let curve = RatioCurve::with_points(&linear(3), 3, 100, 100, &policy).unwrap();
    assert!(matches!(curve.roots(50.0), Err(Error::RangeExhausted { .. })));
}

#[test]
fn production_scan_misses_no_root() {
    let laws: Vec<CouplingLaw> = [
        LawSpec::Linear { nu0: 1.0, tau0: 1.0 },
        LawSpec::Tuned,
        LawSpec::Cubic { a: 0.5, tau0: 1.0 },
        LawSpec::Exponential,
        LawSpec::Quadratic,
    ]
    .iter()
    .map(|s| s.build(3).unwrap())
    .collect();
    for law in &laws {
        let prod = RatioCurve::new(law, 3).unwrap();
        let dense = RatioCurve::with_points(law, 3, 30_000, 70_000, &NumericPolicy::DEFAULT).unwrap();
        for rho in [1.0, 2.2, 2.9, 3.5, 6.0] {
            let (a, b) = match (prod.roots(rho), dense.roots(rho)) {
                (Ok(a), Ok(b)) => (a, b),
                // e.g. iota = log(1 + kappa) stays below rho = 6 up to kappa_max
                (Err(Error::RangeExhausted { .. }), Err(Error::RangeExhausted { .. })) => continue,
                other => panic!("{} at rho = {rho}: {other:?}", law.id()),
            };
            assert_eq!(a.len(), b.len(), "{} at rho = {rho}", law.id());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + y), "{} at rho = {rho}: {x} vs {y}", law.id());
            }
            for &k in &a[1..] {
                let r = consistency_ratio(k, law, 3).unwrap();
                assert!((r - rho).abs() < 1e-8 * rho);
            }
        }
    }
}

#[test]
fn stability_classification() {
    let law = linear(3);
    let k = consistency_roots(4.0, &law, 3).unwrap()[1];
    let rep = classify_stability(k, &law, 3).unwrap();
    assert_eq!(rep.classification, Stability::Stable);
    assert!(rep.derivative > 0.0 && rep.lambda_aniso.unwrap() > 0.0);

    let tuned = CouplingLaw::tuned(3).unwrap();
    let middle = 2.0 - 2f64.sqrt();
    let rep = classify_stability(middle, &tuned, 3).unwrap();
    assert_eq!(rep.classification, Stability::Unstable);
    assert!((rep.derivative - (0.5 * middle - 1.0)).abs() < 1e-7);
    assert!(matches!(classify_stability(2.0, &tuned, 3), Err(Error::MarginalCase { .. })));
    assert!(matches!(decay_rate_anisotropic(middle, &tuned, 3), Err(Error::WrongRegime(_))));
}

#[test]
fn isotropic_rate() {
    let law = linear(3);
    assert!((decay_rate_isotropic(1.5, &law, 3).unwrap() - 1.0).abs() < 1e-6);
    assert!((decay_rate_isotropic(1e-9, &law, 3).unwrap() - 2.0).abs() < 1e-6);
    assert!(matches!(decay_rate_isotropic(3.5, &law, 3), Err(Error::WrongRegime(_))));
}

#[test]
fn anisotropic_rate_is_continuous_along_the_branch() {
    let law = linear(3);
    let curve = RatioCurve::new(&law, 3).unwrap();
    let mut last: Option<f64> = None;
    for i in 0..12 {
        let rho = 3.05 + 0.1 * i as f64;
        let k = curve.roots(rho).unwrap()[1];
        let lam = decay_rate_anisotropic(k, &law, 3).unwrap();
        assert!(lam > 0.0);
        if let Some(prev) = last {
            assert!(lam > prev && lam - prev < 0.5);
        }
        last = Some(lam);
    }
    let small = decay_rate_anisotropic(curve.roots(3.01).unwrap()[1], &law, 3).unwrap();
    assert!(small < 0.05, "{small}");
}

#[test]
fn branches_report_marginal_roots() {
    let tuned = CouplingLaw::tuned(3).unwrap();
    let curve = RatioCurve::new(&tuned, 3).unwrap();
    let br = equilibrium_branches(&curve, &tuned, 3, &[1.5, 2.5, 4.0]).unwrap();
    assert_eq!(br.roots_per_rho[0].len(), 0);
    assert_eq!(br.stability[1], vec![Stability::Unstable, Stability::Stable]);
    assert_eq!(br.stability[2], vec![Stability::Stable]);
    assert_eq!(br.marginal_count, 0);
}
