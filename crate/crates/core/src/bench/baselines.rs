use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;

/// Largest grid the grid baseline will evaluate.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Uniform random search. Returns the best-so-far value after each of the
/// `budget` evaluations.
pub fn random_search_baseline<F, R>(mut objective: F, bbox: &BoxDomain, budget: usize, rng: &mut R) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut best = f64::INFINITY;
    (0..budget)
        .map(|_| {
            let v = objective(&bbox.sample_uniform(rng));
            // NaN never becomes the incumbent
            if v < best {
                best = v;
            }
            best
        })
        .collect()
}

/// Full equispaced grid, visited row-major (last coordinate fastest).
/// Returns the best-so-far trace, one entry per node.
pub fn grid_search_baseline<F>(objective: F, bbox: &BoxDomain, nodes_per_dim: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    grid_search_with_cap(objective, bbox, nodes_per_dim, MAX_GRID_POINTS)
}

pub fn grid_search_with_cap<F>(mut objective: F, bbox: &BoxDomain, nodes_per_dim: usize, cap: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if nodes_per_dim < 2 {
        return Err(Error::domain("grid search needs at least 2 nodes per dimension"));
    }
    let n = bbox.dim();
    let total = u32::try_from(n)
        .ok()
        .and_then(|n| nodes_per_dim.checked_pow(n))
        .filter(|t| *t <= cap)
        .ok_or_else(|| Error::domain(format!("{nodes_per_dim}^{n} grid nodes exceed the cap of {cap}")))?;
    let step: Vec<f64> = bbox.widths().map(|w| w / (nodes_per_dim - 1) as f64).collect();
    let mut idx = vec![0usize; n];
    let mut x = bbox.lower().to_vec();
    let mut best = f64::INFINITY;
    let mut trace = Vec::with_capacity(total);
    for _ in 0..total {
        for i in 0..n {
            // hit the upper bound exactly on the last node
            x[i] = if idx[i] == nodes_per_dim - 1 { bbox.upper()[i] } else { bbox.lower()[i] + idx[i] as f64 * step[i] };
        }
        let v = objective(&x);
        if v < best {
            best = v;
        }
        trace.push(best);
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < nodes_per_dim {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(trace)
}
