//! Ensemble observables and recording.

use nalgebra::Matrix3;
use serde::Serialize;

use super::{step_body, step_vicsek, BodyEnsemble, ParticleEnsemble, SimConfig, Snapshot};
use crate::error::{invalid, Result};
use crate::geometry::polar_rotation;

/// Which particle model to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Vicsek,
    Body,
}

/// Time series of global observables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub d: usize,
    pub t: Vec<f64>,
    pub global_order: Vec<f64>,
    pub mean_direction: Vec<Vec<f64>>,
    pub j_zero_events: Vec<u64>,
}

impl ObservableSeries {
    fn new(d: usize) -> Self {
        Self { d, t: vec![], global_order: vec![], mean_direction: vec![], j_zero_events: vec![] }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// (|<V>|, <V>/|<V>|); the direction is zero when the mean vanishes.
pub fn vicsek_order(ens: &ParticleEnsemble) -> (f64, Vec<f64>) {
    let d = ens.d;
    let n = ens.len() as f64;
    let mut m = vec![0.0; d];
    for c in ens.v.chunks(d) {
        m.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|a| *a /= n);
    let r = m.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dir = if r > 0.0 { m.iter().map(|a| a / r).collect() } else { vec![0.0; d] };
    (r.min(1.0), dir)
}

/// Tr(Lambda^T Abar)/3 with Abar = <A> and Lambda = PD(Abar), and Lambda e_1.
pub fn body_order(ens: &BodyEnsemble) -> (f64, Vec<f64>) {
    let n = ens.len() as f64;
    let mean = ens.a.iter().fold(Matrix3::zeros(), |s, a| s + a.matrix()) / n;
    match polar_rotation(&mean) {
        Ok(l) => {
            let order = (l.matrix().transpose() * mean).trace() / 3.0;
            (order.clamp(0.0, 1.0), l.matrix().column(0).iter().copied().collect())
        }
        Err(_) => (0.0, vec![0.0; 3]),
    }
}

enum State {
    Vicsek(ParticleEnsemble),
    Body(BodyEnsemble),
}

impl State {
    fn record(&self, s: &mut ObservableSeries) {
        let (t, (o, dir), ev) = match self {
            State::Vicsek(e) => (e.t, vicsek_order(e), e.j_zero_events),
            State::Body(e) => (e.t, body_order(e), e.j_zero_events),
        };
        s.t.push(t);
        s.global_order.push(o);
        s.mean_direction.push(dir);
        s.j_zero_events.push(ev);
    }
}

/// Runs `model` for `steps` steps, recording every `stride` steps (and at t = 0).
pub fn run_and_record(model: Model, cfg: &SimConfig, steps: u64, stride: u64) -> Result<ObservableSeries> {
    Ok(run(model, cfg, steps, stride)?.0)
}

/// As [`run_and_record`], also returning the final state.
pub fn run_and_snapshot(
    model: Model,
    cfg: &SimConfig,
    steps: u64,
    stride: u64,
) -> Result<(ObservableSeries, Snapshot)> {
    let (series, state) = run(model, cfg, steps, stride)?;
    let snap = match &state {
        State::Vicsek(e) => Snapshot::from(e),
        State::Body(e) => Snapshot::from(e),
    };
    Ok((series, snap))
}

fn run(model: Model, cfg: &SimConfig, steps: u64, stride: u64) -> Result<(ObservableSeries, State)> {
    if stride == 0 {
        return Err(invalid("recording stride must be positive"));
    }
    let mut state = match model {
        Model::Vicsek => State::Vicsek(ParticleEnsemble::initialize(cfg)?),
        Model::Body => State::Body(BodyEnsemble::initialize(cfg)?),
    };
    let mut series = ObservableSeries::new(cfg.d);
    state.record(&mut series);
    for k in 1..=steps {
        match &mut state {
            State::Vicsek(e) => step_vicsek(e, cfg)?,
            State::Body(e) => step_body(e, cfg)?,
        }
        if k % stride == 0 {
            state.record(&mut series);
        }
    }
    Ok((series, state))
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_mean_stderr(x: &[f64], batches: usize) -> (f64, f64) {
    let b = batches.max(2).min(x.len());
    let size = x.len() / b;
    let means: Vec<f64> = (0..b).map(|k| x[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (m, (var / b as f64).sqrt())
}

/// Slope of -log(c) against t by least squares: the decay rate of c ~ exp(-rate t).
pub fn fit_decay_rate(t: &[f64], c: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = t.iter().zip(c).filter(|(_, c)| **c > 0.0).map(|(t, c)| (*t, c.ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    -sxy / sxx
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// E[V_i(t) . V_i(0)] under the Vicsek dynamics, every `stride` steps.
pub fn velocity_autocorrelation(cfg: &SimConfig, steps: u64, stride: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut e = ParticleEnsemble::initialize(cfg)?;
    let v0 = e.v.clone();
    let corr = |e: &ParticleEnsemble| e.v.iter().zip(&v0).map(|(a, b)| a * b).sum::<f64>() / e.len() as f64;
    let (mut t, mut c) = (vec![0.0], vec![corr(&e)]);
    for k in 1..=steps {
        step_vicsek(&mut e, cfg)?;
        if k % stride == 0 {
            t.push(e.t);
            c.push(corr(&e));
        }
    }
    Ok((t, c))
}

/// Rotation angles of A_i relative to `reference`.
pub fn relative_angles(ens: &BodyEnsemble, reference: &Matrix3<f64>) -> Vec<f64> {
    ens.a.iter().map(|a| (((reference.transpose() * a.matrix()).trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()).collect()
}

/// CDF of the Haar rotation angle, (theta - sin theta) / pi.
pub fn haar_angle_cdf(theta: f64) -> f64 {
    (theta - theta.sin()) / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::InitialCondition;

    fn cfg() -> SimConfig {
        SimConfig {
            n: 400,
            l: 5.0,
            r: 1.0,
            nu: 1.0,
            tau: 0.5,
            dt: 0.02,
            d: 2,
            seed: 77,
            initial: InitialCondition::Uniform,
        }
    }

    #[test]
    fn same_seed_same_series() {
        let a = run_and_record(Model::Vicsek, &cfg(), 40, 4).unwrap();
        let b = run_and_record(Model::Vicsek, &cfg(), 40, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.global_order.iter().all(|o| (0.0..=1.0).contains(o)));
    }

    #[test]
    fn stride_does_not_perturb_dynamics() {
        let a = run_and_record(Model::Vicsek, &cfg(), 40, 1).unwrap();
        let b = run_and_record(Model::Vicsek, &cfg(), 40, 10).unwrap();
        for (k, t) in b.t.iter().enumerate() {
            let i = a.t.iter().position(|s| s == t).unwrap();
            assert_eq!(a.global_order[i], b.global_order[k]);
            assert_eq!(a.mean_direction[i], b.mean_direction[k]);
        }
        let c = SimConfig { d: 3, ..cfg() };
        let a = run_and_record(Model::Body, &c, 20, 1).unwrap();
        let b = run_and_record(Model::Body, &c, 20, 5).unwrap();
        assert_eq!(a.global_order[20], b.global_order[4]);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_and_record(Model::Vicsek, &cfg(), 30, 3).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn helpers() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let c: Vec<f64> = t.iter().map(|t| (-2.5 * t).exp()).collect();
        assert!((fit_decay_rate(&t, &c) - 2.5).abs() < 1e-12);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&u, |x| x) <= 0.0005 + 1e-12);
        assert!((haar_angle_cdf(std::f64::consts::PI) - 1.0).abs() < 1e-15);
        let (m, se) = batch_mean_stderr(&[1.0, 1.0, 1.0, 1.0], 2);
        assert_eq!((m, se), (1.0, 0.0));
    }
}
