//! Reproducible sample points for sup-error measurement.
//!
//! Each cell draws from its own ChaCha stream keyed by `(seed, stream)`, so
//! results do not depend on thread scheduling or cell order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::model::{euclid, TaylorModel};
use crate::partition::Cell;

/// Corners are taken over at most this many leading coordinates.
pub const MAX_CORNER_DIMS: usize = 10;

/// `samples` uniform points in `cell` followed by its `2^{min(d,10)}` corners.
/// Coordinates past the first ten sit at their upper endpoint in every corner.
pub fn cell_points(cell: &Cell, d: usize, samples: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let corner_dims = d.min(MAX_CORNER_DIMS);
    let mut points = Vec::with_capacity(samples + (1 << corner_dims));
    for _ in 0..samples {
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        points.push(cell.map_from_unit(&z));
    }
    for mask in 0u32..(1 << corner_dims) {
        let z: Vec<f64> = (0..d)
            .map(|j| {
                if j < corner_dims && mask & (1 << j) == 0 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect();
        points.push(clamp_to_cube(cell.map_from_unit(&z)));
    }
    points
}

fn clamp_to_cube(mut y: Vec<f64>) -> Vec<f64> {
    for v in &mut y {
        *v = v.clamp(-1.0, 1.0);
    }
    y
}

/// `max_y ||u(y) - approx(y)||` over `points`.
pub fn sup_error<F>(model: &TaylorModel, approx: F, points: &[Vec<f64>]) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    points
        .iter()
        .map(|y| {
            let exact = model.evaluate_unchecked(y);
            let diff: Vec<f64> = exact.iter().zip(approx(y)).map(|(a, b)| a - b).collect();
            euclid(&diff)
        })
        .fold(0.0, f64::max)
}
