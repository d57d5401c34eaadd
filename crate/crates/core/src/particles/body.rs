use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::cells::CellList;
use super::config::{InitialCondition, Interaction, SimConfig};
use super::{particle_rng, wrap};
use crate::error::{invalid, Error, Result};
use crate::geometry::{exp_so3, polar_rotation_with, uniform_rotation, vee_antisym, RotationMatrix};
use crate::policy::NumericPolicy;
use crate::vmf::VmfRotation;

/// Positions (row-major N x 3) and attitudes of a body-attitude ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyEnsemble {
    pub x: Vec<f64>,
    pub a: Vec<RotationMatrix>,
    pub t: f64,
    pub step: u64,
    /// Cumulative count of particles whose neighbor mean had no polar factor.
    pub j_zero_events: u64,
}

/// Steps between re-orthonormalizations of the attitudes.
const RENORMALIZE_EVERY: u64 = 100;

impl BodyEnsemble {
    pub fn initialize(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.d != 3 {
            return Err(invalid("the body-attitude model requires d = 3"));
        }
        let vmf = match cfg.initial {
            InitialCondition::Vmf { kappa } => Some(VmfRotation::new(RotationMatrix::identity(), kappa)?),
            _ => None,
        };
        let rows: Vec<([f64; 3], RotationMatrix)> = (0..cfg.n)
            .into_par_iter()
            .map(|i| {
                let mut rng = particle_rng(cfg.seed, i, 0);
                let x = [0; 3].map(|_| rng.random_range(0.0..cfg.l));
                let a = match cfg.initial {
                    InitialCondition::Aligned => RotationMatrix::identity(),
                    InitialCondition::Uniform => uniform_rotation(&mut rng),
                    InitialCondition::Vmf { .. } => vmf.as_ref().unwrap().sample(&mut rng),
                };
                (x, a)
            })
            .collect();
        let x = rows.iter().flat_map(|r| r.0).collect();
        let a = rows.into_iter().map(|r| r.1).collect();
        Ok(Self { x, a, t: 0.0, step: 0, j_zero_events: 0 })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Largest Frobenius defect of A^T A - I or det A - 1.
    pub fn max_rotation_defect(&self) -> f64 {
        self.a
            .iter()
            .map(|r| {
                let m = r.matrix();
                (m.transpose() * m - Matrix3::identity()).norm().max((m.determinant() - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// One synchronous step: move along A e_1, polar-decompose the neighbor sum,
/// then A <- exp(dt nu vee(antisym(Lambda A^T)) + sqrt(2 tau dt) eta) A.
pub fn step_body(ens: &mut BodyEnsemble, cfg: &SimConfig) -> Result<()> {
    let mode = cfg.validate()?;
    if cfg.d != 3 {
        return Err(invalid("the body-attitude model requires d = 3"));
    }
    let n = ens.len();
    let singular_tol = NumericPolicy::DEFAULT.singular_tol;
    let mut x = std::mem::take(&mut ens.x);
    x.par_chunks_mut(3).zip(ens.a.par_iter()).for_each(|(xi, a)| {
        for k in 0..3 {
            xi[k] = wrap(xi[k] + cfg.dt * a.matrix()[(k, 0)], cfg.l);
        }
    });
    let global = (mode == Interaction::AllToAll).then(|| ens.a.iter().fold(Matrix3::zeros(), |s, a| s + a.matrix()));
    let cells = (mode == Interaction::Local).then(|| CellList::build(&x, 3, cfg.l, cfg.r));
    let global_polar = global.map(|g| polar_rotation_with(&g, singular_tol * n as f64));
    let step = ens.step + 1;
    let noise = (2.0 * cfg.tau * cfg.dt).sqrt();
    let renorm = step.is_multiple_of(RENORMALIZE_EVERY);
    let a_old = &ens.a;
    let updated: Vec<(RotationMatrix, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lambda = match (&global_polar, &cells) {
                (Some(p), _) => p.clone(),
                (None, Some(cl)) => {
                    let mut g = Matrix3::zeros();
                    let mut count = 0usize;
                    cl.for_each_neighbor(&x, i, |k| {
                        g += a_old[k].matrix();
                        count += 1;
                    });
                    polar_rotation_with(&g, singular_tol * count as f64)
                }
                _ => unreachable!(),
            };
            let ai = a_old[i].matrix();
            let mut rng = particle_rng(cfg.seed, i, step);
            let eta = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let (drift, degenerate) = match lambda {
                Ok(l) => (vee_antisym(&(l.matrix() * ai.transpose())) * (cfg.dt * cfg.nu), false),
                Err(Error::NearSingular { .. }) => (Vector3::zeros(), true),
                Err(_) => (Vector3::zeros(), true),
            };
            let next = exp_so3(&(drift + eta * noise)).matrix() * ai;
            let next =
                if renorm { RotationMatrix::renormalized(next) } else { RotationMatrix::from_matrix_unchecked(next) };
            (next, degenerate)
        })
        .collect();
    let mut events = 0;
    for (i, (a, deg)) in updated.into_iter().enumerate() {
        ens.a[i] = a;
        events += deg as u64;
    }
    ens.x = x;
    ens.t = step as f64 * cfg.dt;
    ens.step = step;
    ens.j_zero_events += events;
    debug_assert!(ens.max_rotation_defect() < 1e-10);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig {
            n: 200,
            l: 6.0,
            r: 1.0,
            nu: 3.0,
            tau: 0.0,
            dt: 0.01,
            d: 3,
            seed: 9,
            initial: InitialCondition::Aligned,
        }
    }

    #[test]
    fn aligned_attitudes_are_fixed_without_noise() {
        let c = cfg();
        let mut e = BodyEnsemble::initialize(&c).unwrap();
        for _ in 0..30 {
            step_body(&mut e, &c).unwrap();
        }
        assert!(e.a.iter().all(|a| (a.matrix() - Matrix3::identity()).norm() < 1e-14));
        assert_eq!(e.j_zero_events, 0);
    }

    #[test]
    fn rotations_stay_valid() {
        let c = SimConfig { tau: 1.0, initial: InitialCondition::Uniform, ..cfg() };
        let mut e = BodyEnsemble::initialize(&c).unwrap();
        for _ in 0..250 {
            step_body(&mut e, &c).unwrap();
        }
        assert!(e.max_rotation_defect() < 1e-10);
        assert!(e.x.iter().all(|&p| (0.0..c.l).contains(&p)));
    }

    #[test]
    fn rejects_planar_configs() {
        let c = SimConfig { d: 2, ..cfg() };
        assert!(BodyEnsemble::initialize(&c).is_err());
    }
}
