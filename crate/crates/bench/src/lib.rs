//! Shared inputs for the criterion benches.

use kikuchi::{fixtures, Complex, Field, Hypergraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Binary complex over `x` with seeded random potentials.
pub fn instance(x: Hypergraph, seed: u64) -> (Complex, Field) {
    let cx = Complex::uniform(x, 2).expect("binary complex");
    let h = fixtures::random_potentials(&cx, &mut ChaCha8Rng::seed_from_u64(seed), 1.0).expect("potentials");
    (cx, h)
}

pub fn instances() -> Vec<(&'static str, Complex, Field)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    [
        ("t1", fixtures::t1()),
        ("triangle", fixtures::triangle()),
        ("tree7", fixtures::random_tree_cover(&mut rng, 7)),
        ("random6", fixtures::random_closed(&mut rng, 6)),
    ]
    .into_iter()
    .map(|(name, x)| {
        let (cx, h) = instance(x, 11);
        (name, cx, h)
    })
    .collect()
}
