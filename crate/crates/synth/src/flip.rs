use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Result, SynthError};

type Point = ddval_core::Point;

/// Flips each label entry independently with probability `fraction`.
///
/// Returns the new points (with `flips` incremented) and the number of labels
/// flipped per point.
pub fn flip_labels(data: &[Point], fraction: f64, seed: u64) -> Result<(Vec<Point>, Vec<u32>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(SynthError::InvalidFraction(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(data.len());
    let flipped = data
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let mut count = 0;
            for y in p.labels.iter_mut() {
                if rng.random_bool(fraction) {
                    *y = 1 - *y;
                    count += 1;
                }
            }
            p.flips += count;
            counts.push(count);
            p
        })
        .collect();
    Ok((flipped, counts))
}

/// Client `c` flips with probability `0.05 * c`, capped at 0.25.
pub fn linear_flip_fractions(n_clients: usize) -> Vec<f64> {
    (0..n_clients).map(|c| (0.05 * c as f64).min(0.25)).collect()
}
