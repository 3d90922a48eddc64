use super::{dist, ConstrainedDomain, Point, SampleSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::stream_rng;

/// Rejection attempts allowed per requested member point.
const ATTEMPTS_PER_MEMBER: usize = 1_000_000;

/// Half the smallest pairwise distance.
pub fn separation_distance(s: &SampleSet) -> Result<f64> {
    if s.len() < 2 {
        return Err(Error::domain("separation distance needs at least 2 points"));
    }
    Ok(0.5 * s.nn_dist().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest nearest-neighbour distance, `max_i min_{j != i} |x_i - x_j|`.
pub fn max_nn_distance(s: &SampleSet) -> Result<f64> {
    if s.len() < 2 {
        return Err(Error::domain("max nearest-neighbour distance needs at least 2 points"));
    }
    Ok(s.nn_dist().iter().copied().fold(0.0, f64::max))
}

/// `count` uniform members of `d`, each drawn by rejection from its own stream.
pub fn sample_members(d: &ConstrainedDomain, count: usize, seed: u64, exec: Exec) -> Result<Vec<Point>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    // fail fast on empty domains before fanning out
    let first = d.sample_member(&mut stream_rng(seed, 0), ATTEMPTS_PER_MEMBER)?;
    let mut rest = exec.map(count - 1, |j| {
        let i = j + 1;
        let mut rng = stream_rng(seed, i as u64);
        d.sample_member(&mut rng, ATTEMPTS_PER_MEMBER)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    rest.insert(0, first);
    Ok(rest)
}

/// Monte-Carlo lower estimate of the fill distance: the largest distance from
/// `probes` uniform members of `d` to their nearest sample.
pub fn fill_distance_probe(
    s: &SampleSet,
    d: &ConstrainedDomain,
    probes: usize,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    if probes == 0 {
        return Err(Error::domain("fill distance needs at least one probe"));
    }
    if s.is_empty() {
        return Err(Error::domain("fill distance needs a nonempty sample set"));
    }
    let pts = sample_members(d, probes, seed, exec)?;
    let far = exec.map(pts.len(), |i| {
        s.points().iter().map(|p| dist(p, &pts[i])).fold(f64::INFINITY, f64::min)
    });
    Ok(far.into_iter().fold(0.0, f64::max))
}
