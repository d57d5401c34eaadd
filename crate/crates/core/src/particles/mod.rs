//! Stochastic particle simulations of the Vicsek and body-attitude models
//! in a periodic box.

mod body;
mod cells;
mod config;
mod observe;
mod snapshot;
mod vicsek;

pub use body::{step_body, BodyEnsemble};
pub use cells::{brute_force_neighbors, min_image_dist2, CellList};
pub use config::{InitialCondition, Interaction, SimConfig};
pub use observe::*;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotState};
pub use vicsek::{step_vicsek, ParticleEnsemble};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per particle and step in its RNG stream.
const WORDS_PER_STEP: u128 = 1 << 16;

/// Counter-based stream for particle `label` at step `step` (step 0 is initialization).
pub(crate) fn particle_rng(seed: u64, label: usize, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label as u64);
    rng.set_word_pos(step as u128 * WORDS_PER_STEP);
    rng
}

#[inline]
pub(crate) fn wrap(x: f64, l: f64) -> f64 {
    let y = x.rem_euclid(l);
    if y >= l {
        0.0
    } else {
        y
    }
}
