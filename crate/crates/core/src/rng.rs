//! Seeded random streams.
//!
//! Every stochastic routine takes its generator explicitly. Independent tasks
//! derive their own stream from a root seed so results do not depend on
//! scheduling order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator family rooted at `seed`.
pub fn derive(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Vector of standard normals; with `complex` set, real and imaginary parts
/// are drawn independently, each with unit variance.
pub fn normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, complex: bool) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let re = standard_normal(rng);
            let im = if complex { standard_normal(rng) } else { 0.0 };
            Complex64::new(re, im)
        })
        .collect()
}
