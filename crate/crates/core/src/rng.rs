//! Seeded random streams and random test fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{sup_radius, Field, LatticeSpec};

/// Independent, reproducible stream `stream` derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Entries uniform in `[-1, 1]` on every site.
pub fn uniform_field<R: Rng>(spec: LatticeSpec, rng: &mut R) -> Field {
    let values = (0..spec.site_count())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    Field::new(spec, values).expect("finite by construction")
}

/// Uniform `[-1, 1]` entries on sites with `max_j |x_j| <= reach`, zero elsewhere.
pub fn supported_field<R: Rng>(spec: LatticeSpec, reach: i64, rng: &mut R) -> Field {
    Field::from_fn(spec, |x| {
        if sup_radius(x) <= reach {
            rng.random_range(-1.0..=1.0)
        } else {
            0.0
        }
    })
    .expect("finite by construction")
}

/// Mostly positive field with an envelope decaying away from the origin.
pub fn decaying_field<R: Rng>(spec: LatticeSpec, rng: &mut R) -> Field {
    let width = (spec.radius() as f64 / 2.0).max(1.0);
    Field::from_fn(spec, |x| {
        let l1: i64 = x.iter().map(|c| c.abs()).sum();
        let envelope = (-(l1 as f64) / width).exp();
        envelope * rng.random_range(-0.25..=1.0)
    })
    .expect("finite by construction")
}
