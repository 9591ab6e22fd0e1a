use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result, Vec3};

/// Greedy farthest-point sampling.
///
/// The first index is drawn uniformly from a generator seeded with `seed`;
/// every following pick maximizes the distance to the nearest already-chosen
/// point, ties going to the smallest index.
pub fn farthest_point_sample(points: &[Vec3], m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m > points.len() {
        return Err(Error::arg(format!(
            "sample count {m} outside 1..={}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..points.len());
    Ok(farthest_point_sample_from(points, m, first))
}

/// Farthest-point sampling with a caller-chosen first index.
pub fn farthest_point_sample_from(points: &[Vec3], m: usize, first: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(m);
    chosen.push(first);
    let mut nearest: Vec<f64> = points
        .par_iter()
        .map(|p| (p - points[first]).norm_squared())
        .collect();
    nearest[first] = f64::NEG_INFINITY;
    while chosen.len() < m {
        // (distance, index) maximum with smallest-index tie-break; the reduction is
        // associative so the parallel schedule cannot change the result
        let (best, _) = nearest
            .par_iter()
            .enumerate()
            .map(|(i, &d)| (i, d))
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        chosen.push(best);
        let pick = points[best];
        nearest.par_iter_mut().zip(points.par_iter()).for_each(|(d, p)| {
            let dist = (p - pick).norm_squared();
            if dist < *d {
                *d = dist;
            }
        });
        // chosen points can never be picked again even when duplicates exist
        nearest[best] = f64::NEG_INFINITY;
    }
    chosen
}
