//! Seeded randomness shared by the stochastic searches.
//!
//! Every random stream is a ChaCha8 generator keyed by the run seed and
//! selected by a stream number, so work items draw the same numbers no
//! matter which thread runs them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A draw from the flat Dirichlet distribution on the `n`-simplex.
pub fn flat_dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let gamma: Gamma<f64> = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng).max(1e-300)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|v| v / total).collect()
}
