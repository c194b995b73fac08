#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use pfsic_core::constructions::random_rank_one_povm;
use pfsic_core::RankOnePovm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random valid POVM with `d` in `dims` and `n` in `d..=3d`.
pub fn random_povm<R: Rng>(rng: &mut R, dims: std::ops::RangeInclusive<usize>, orthogonal_outcome: bool) -> RankOnePovm {
    let d = rng.random_range(dims);
    let n = rng.random_range(d..=3 * d);
    random_rank_one_povm(d, n, orthogonal_outcome, rng).expect("valid random POVM")
}

pub fn computational_basis(d: usize) -> RankOnePovm {
    RankOnePovm::from_vectors(
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
