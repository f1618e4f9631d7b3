//! Seeded randomness. Every stochastic draw goes through a `ChaCha8Rng`
//! built from a 64-bit seed so runs are reproducible across platforms and
//! thread counts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::signal::ComplexMatrix;

/// Independent draw streams carved out of one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Symbols = 2,
    CommNoise = 3,
    SenseNoise = 4,
    /// Noise of single detection runs.
    Detect = 5,
}

/// SplitMix64 finalizer; a bijection on `u64`.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` at sweep point `point` of `stream`.
///
/// The key is `root + (stream << 56) + (point << 32) + trial`, pushed through
/// SplitMix64. For `point < 2^24` and `trial < 2^32` distinct
/// `(stream, point, trial)` give distinct keys and therefore distinct seeds.
pub fn derive_seed(root: u64, stream: Stream, point: u64, trial: u64) -> u64 {
    let key = root
        .wrapping_add((stream as u64) << 56)
        .wrapping_add(point << 32)
        .wrapping_add(trial);
    splitmix64(key)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One CN(0, variance) sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> ComplexMatrix {
    // Fill column-major explicitly so the draw order is part of the contract.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng, variance);
        }
    }
    m
}
