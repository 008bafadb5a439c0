//! Seeded randomness. Every randomized routine takes an explicit seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for sub-task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer, so nearby indices give unrelated streams.
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn complex_gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix<Complex64> {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}
