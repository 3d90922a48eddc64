//! Contracted domains and quasi-uniform sampling inside them.

mod domain;
mod lowdisc;
mod metrics;
mod sample_set;
mod sampling;

pub use domain::{BoxDomain, ConstrainedDomain, Constraint, FnConstraint, Normalizer};
pub use lowdisc::{halton, halton_points};
pub use metrics::{fill_distance_probe, max_nn_distance, sample_members, separation_distance};
pub use sample_set::SampleSet;
pub use sampling::{
    candidate_sigma, generate_candidates, generate_candidates_with_sigma, rrw_endpoint, select_farthest,
    Selection, WalkEndpoint, WalkParams,
};

pub type Point = Vec<f64>;

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}
