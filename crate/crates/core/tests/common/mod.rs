#![allow(dead_code)]

use fairhorizon::oracle::enumerate_configurations;
use fairhorizon::Instance;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random instance with at most 6 zones, 3 bases and 2 ambulances that has
/// at least one configuration meeting its coverage floor.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(3..=6);
        let base_count = rng.random_range(1..=3usize.min(n));
        let mut bases = sample(&mut rng, n, base_count).into_vec();
        bases.sort_unstable();
        let fleet = rng.random_range(1..=2);
        let reach = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| u8::from(i == j || (bases.contains(&j) && rng.random_bool(0.5))))
                    .collect()
            })
            .collect();
        let demand = (0..n).map(|_| rng.random_range(1..=fleet)).collect();
        let coverage_floor = [0.0, 0.3, 0.5][rng.random_range(0..3)];
        let inst = Instance {
            n,
            bases,
            reach,
            demand,
            fleet,
            coverage_floor,
            transition_limit: 1,
            horizon: 1,
        };
        inst.validate().expect("generated instance is well formed");
        if !enumerate_configurations(&inst, true).is_empty() {
            return inst;
        }
    }
}
