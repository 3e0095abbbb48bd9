//! Deterministic random streams.
//!
//! Every work item (restart, trial, direction batch) gets its own ChaCha
//! stream derived from one user seed, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMat, CVec, C64};

pub type Rng = ChaCha8Rng;

/// Independent generator for work item `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

/// Haar-random unit vector.
pub fn random_unit_vector(rng: &mut Rng, dim: usize) -> CVec {
    let v = CVec::from_fn(dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Uniformly distributed real unit vector in `R^k`.
pub fn random_direction(rng: &mut Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| gaussian(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}
