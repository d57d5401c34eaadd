use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::cells::CellList;
use super::config::{InitialCondition, Interaction, SimConfig};
use super::{particle_rng, wrap};
use crate::error::Result;
use crate::geometry::UnitVector;
use crate::policy::NumericPolicy;
use crate::vmf::VmfSphere;

/// Positions and unit velocities of a Vicsek ensemble, row-major N x d.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub d: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub step: u64,
    /// Cumulative count of particles whose neighbor momentum vanished.
    pub j_zero_events: u64,
}

impl ParticleEnsemble {
    /// Draws positions uniformly in the box and orientations per `cfg.initial`
    /// around e_1.
    pub fn initialize(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d;
        let vmf = match cfg.initial {
            InitialCondition::Vmf { kappa } => Some(VmfSphere::new(UnitVector::basis(d, 0), kappa)?),
            _ => None,
        };
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n)
            .into_par_iter()
            .map(|i| {
                let mut rng = particle_rng(cfg.seed, i, 0);
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..cfg.l)).collect();
                let v = match cfg.initial {
                    InitialCondition::Aligned => UnitVector::basis(d, 0).into_vec(),
                    InitialCondition::Uniform => crate::vmf::random_orthogonal(&vec![0.0; d], &mut rng),
                    InitialCondition::Vmf { .. } => vmf.as_ref().unwrap().sample(&mut rng).into_vec(),
                };
                (x, v)
            })
            .collect();
        let mut x = Vec::with_capacity(cfg.n * d);
        let mut v = Vec::with_capacity(cfg.n * d);
        for (a, b) in rows {
            x.extend(a);
            v.extend(b);
        }
        Ok(Self { d, x, v, t: 0.0, step: 0, j_zero_events: 0 })
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.d..(i + 1) * self.d]
    }

    /// Largest | |V_i| - 1 |.
    pub fn max_norm_defect(&self) -> f64 {
        self.v.chunks(self.d).map(|c| (c.iter().map(|a| a * a).sum::<f64>().sqrt() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Sum of velocities in fixed index order.
pub(crate) fn total_momentum(v: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d];
    for c in v.chunks(d) {
        s.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    s
}

/// One synchronous step: move, sum neighbor momenta, then the projected
/// alignment-plus-noise update renormalized onto the sphere.
pub fn step_vicsek(ens: &mut ParticleEnsemble, cfg: &SimConfig) -> Result<()> {
    let mode = cfg.validate()?;
    let d = ens.d;
    let n = ens.len();
    let j_tol = NumericPolicy::DEFAULT.j_tol;
    let mut x = std::mem::take(&mut ens.x);
    x.par_chunks_mut(d).zip(ens.v.par_chunks(d)).for_each(|(xi, vi)| {
        for k in 0..d {
            xi[k] = wrap(xi[k] + cfg.dt * vi[k], cfg.l);
        }
    });
    let global = (mode == Interaction::AllToAll).then(|| total_momentum(&ens.v, d));
    let cells = (mode == Interaction::Local).then(|| CellList::build(&x, d, cfg.l, cfg.r));
    let step = ens.step + 1;
    let noise = (2.0 * cfg.tau * cfg.dt).sqrt();
    let v_old = &ens.v;
    let mut v_new = vec![0.0; n * d];
    let events: u64 = v_new
        .par_chunks_mut(d)
        .enumerate()
        .map(|(i, out)| {
            // d <= 3, so fixed-size buffers avoid per-particle allocation.
            let mut j = [0.0; 3];
            match (&global, &cells) {
                (Some(g), _) => j[..d].copy_from_slice(g),
                (None, Some(cl)) => cl.for_each_neighbor(&x, i, |k| {
                    j[..d].iter_mut().zip(&v_old[k * d..(k + 1) * d]).for_each(|(a, b)| *a += b);
                }),
                _ => unreachable!(),
            }
            let vi = &v_old[i * d..(i + 1) * d];
            let jn = j.iter().map(|a| a * a).sum::<f64>().sqrt();
            let degenerate = !(jn >= j_tol);
            let mut rng = particle_rng(cfg.seed, i, step);
            let mut xi = [0.0; 3];
            xi[..d].iter_mut().for_each(|a| *a = rng.sample(StandardNormal));
            let c_xi: f64 = xi.iter().zip(vi).map(|(a, b)| a * b).sum();
            for k in 0..d {
                out[k] = vi[k] + noise * (xi[k] - c_xi * vi[k]);
            }
            if !degenerate {
                let c_u: f64 = j.iter().zip(vi).map(|(a, b)| a * b).sum::<f64>() / jn;
                for k in 0..d {
                    out[k] += cfg.dt * cfg.nu * (j[k] / jn - c_u * vi[k]);
                }
            }
            let wn = out.iter().map(|a| a * a).sum::<f64>().sqrt();
            out.iter_mut().for_each(|a| *a /= wn);
            degenerate as u64
        })
        .sum();
    ens.v = v_new;
    ens.x = x;
    ens.t = step as f64 * cfg.dt;
    ens.step = step;
    ens.j_zero_events += events;
    debug_assert!(ens.max_norm_defect() < 1e-12);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig {
            n: 300,
            l: 8.0,
            r: 1.0,
            nu: 2.0,
            tau: 0.0,
            dt: 0.01,
            d: 3,
            seed: 5,
            initial: InitialCondition::Aligned,
        }
    }

    #[test]
    fn aligned_state_is_fixed_without_noise() {
        let c = cfg();
        let mut e = ParticleEnsemble::initialize(&c).unwrap();
        for _ in 0..50 {
            step_vicsek(&mut e, &c).unwrap();
        }
        for i in 0..e.len() {
            assert_eq!(e.velocity(i), &[1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn unit_norm_is_preserved() {
        let c = SimConfig { tau: 1.0, initial: InitialCondition::Uniform, ..cfg() };
        let mut e = ParticleEnsemble::initialize(&c).unwrap();
        for _ in 0..100 {
            step_vicsek(&mut e, &c).unwrap();
            assert!(e.max_norm_defect() < 1e-12);
            assert!(e.x.iter().all(|&p| (0.0..c.l).contains(&p)));
        }
    }

    #[test]
    fn isolated_particle_aligns_with_itself() {
        let c = SimConfig { n: 1, initial: InitialCondition::Uniform, ..cfg() };
        let mut e = ParticleEnsemble::initialize(&c).unwrap();
        let v0 = e.v.clone();
        step_vicsek(&mut e, &c).unwrap();
        assert!(e.v.iter().zip(&v0).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(e.j_zero_events, 0);
    }

    #[test]
    fn opposite_pair_counts_degenerate_momentum() {
        let c = SimConfig { n: 2, l: 10.0, r: 1.0, tau: 0.0, initial: InitialCondition::Aligned, ..cfg() };
        let mut e = ParticleEnsemble::initialize(&c).unwrap();
        e.x = vec![5.0, 5.0, 5.0, 5.2, 5.0, 5.0];
        e.v = vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        step_vicsek(&mut e, &c).unwrap();
        assert_eq!(e.j_zero_events, 2);
        assert_eq!(e.v, vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn all_to_all_momentum_is_shared() {
        let c = SimConfig { n: 50, l: 2.0, r: 2.0, tau: 0.3, initial: InitialCondition::Uniform, ..cfg() };
        assert_eq!(c.validate().unwrap(), Interaction::AllToAll);
        let mut e = ParticleEnsemble::initialize(&c).unwrap();
        let j = total_momentum(&e.v, 3);
        let cl = CellList::build(&e.x, 3, c.l, c.r);
        // every pair is within reach in the periodic box
        assert_eq!(cl.neighbors(&e.x, 7).len(), 50);
        assert!(j.iter().all(|a| a.is_finite()));
        step_vicsek(&mut e, &c).unwrap();
    }
}
