//! Reflected random walks and greedy farthest-point selection.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{dist, max_nn_distance, ConstrainedDomain, Point, SampleSet};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct WalkParams {
    /// Candidates generated per existing point.
    pub n_c: usize,
    /// Steps per walk.
    pub steps: usize,
    /// Reflection reduction factor, in (0, 1).
    pub reduction: f64,
    /// Reflection retries before a step is abandoned.
    pub j_max: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { n_c: 100, steps: 10, reduction: 0.5, j_max: 50 }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 || self.steps == 0 || self.j_max == 0 {
            return Err(Error::Config("walk n_c, steps and j_max must be >= 1".into()));
        }
        if !(self.reduction > 0.0 && self.reduction < 1.0) {
            return Err(Error::Config(format!("walk reduction {} not in (0,1)", self.reduction)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkEndpoint {
    pub point: Point,
    /// Steps where no reflection restored membership and the walk stayed put.
    pub abandoned_steps: usize,
}

fn normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Walks `walk.steps` Gaussian steps of scale `sigma` from `start`, reflecting
/// any step that leaves `d`. A failed step is retried as
/// `z - (-a)^j sigma w + a^(j+1) sigma w'` for `j = 0, 1, ..., j_max`; if none
/// of those is a member the walker stays where it is.
pub fn rrw_endpoint<R: Rng + ?Sized>(
    start: &[f64],
    sigma: f64,
    walk: &WalkParams,
    d: &ConstrainedDomain,
    rng: &mut R,
) -> Result<WalkEndpoint> {
    if !d.contains(start) {
        return Err(Error::domain("walk start is not a member of the domain"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::domain(format!("walk sigma must be >= 0, got {sigma}")));
    }
    let n = start.len();
    let mut z = start.to_vec();
    let mut abandoned = 0;
    if sigma == 0.0 {
        return Ok(WalkEndpoint { point: z, abandoned_steps: 0 });
    }
    let mut trial = vec![0.0; n];
    for _ in 0..walk.steps {
        let w = normal_vec(rng, n);
        for i in 0..n {
            trial[i] = z[i] + sigma * w[i];
        }
        if d.contains(&trial) {
            z.copy_from_slice(&trial);
            continue;
        }
        let w2 = normal_vec(rng, n);
        let a = walk.reduction;
        let mut moved = false;
        // (-a)^j and a^(j+1)
        let mut back = 1.0;
        let mut jitter = a;
        for _ in 0..=walk.j_max {
            for i in 0..n {
                trial[i] = z[i] - back * sigma * w[i] + jitter * sigma * w2[i];
            }
            if d.contains(&trial) {
                z.copy_from_slice(&trial);
                moved = true;
                break;
            }
            back *= -a;
            jitter *= a;
        }
        if !moved {
            abandoned += 1;
        }
    }
    Ok(WalkEndpoint { point: z, abandoned_steps: abandoned })
}

/// Step scale used by candidate generation: `d_chi / sqrt(T)`, or
/// `diameter / sqrt(T)` while the set has fewer than two points.
pub fn candidate_sigma(s: &SampleSet, walk: &WalkParams, d: &ConstrainedDomain) -> f64 {
    let spread = max_nn_distance(s).unwrap_or_else(|_| d.bbox().diameter());
    spread / (walk.steps as f64).sqrt()
}

/// `n_c` walk endpoints from every point of `s`, with the default step scale.
pub fn generate_candidates<R: Rng + ?Sized>(
    s: &SampleSet,
    walk: &WalkParams,
    d: &ConstrainedDomain,
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Point>> {
    let sigma = candidate_sigma(s, walk, d);
    generate_candidates_with_sigma(s, walk, d, sigma, rng, exec)
}

/// Like [`generate_candidates`] with an explicit step scale. Each seed point
/// walks on its own stream split from one draw of `rng`, so the output does
/// not depend on `exec`.
pub fn generate_candidates_with_sigma<R: Rng + ?Sized>(
    s: &SampleSet,
    walk: &WalkParams,
    d: &ConstrainedDomain,
    sigma: f64,
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Point>> {
    walk.validate()?;
    let root: u64 = rng.random();
    let per_seed = exec.map(s.len(), |i| -> Result<Vec<Point>> {
        let mut r = stream_rng(root, i as u64);
        (0..walk.n_c)
            .map(|_| rrw_endpoint(&s.points()[i], sigma, walk, d, &mut r).map(|e| e.point))
            .collect()
    });
    let mut out = Vec::with_capacity(s.len() * walk.n_c);
    for chunk in per_seed {
        out.extend(chunk?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub points: Vec<Point>,
    /// The maximised nearest distance at each pick.
    pub gains: Vec<f64>,
    /// Set when the pool ran out before `count` picks.
    pub short: bool,
}

/// Greedily picks `count` candidates, each maximising the distance to
/// `existing` plus the earlier picks. Ties go to the lowest candidate index.
/// Runs in O(count * |candidates| + |candidates| * |existing|).
pub fn select_farthest(existing: &[Point], candidates: &[Point], count: usize) -> Selection {
    let mut nearest: Vec<f64> = candidates
        .iter()
        .map(|c| existing.iter().map(|p| dist(p, c)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut taken = vec![false; candidates.len()];
    let mut points = Vec::with_capacity(count);
    let mut gains = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<usize> = None;
        for (i, d) in nearest.iter().enumerate() {
            if taken[i] {
                continue;
            }
            match best {
                Some(b) if nearest[b] >= *d => {}
                _ => best = Some(i),
            }
        }
        let Some(b) = best else { break };
        taken[b] = true;
        gains.push(nearest[b]);
        let chosen = candidates[b].clone();
        for (i, c) in candidates.iter().enumerate() {
            if !taken[i] {
                nearest[i] = nearest[i].min(dist(c, &chosen));
            }
        }
        points.push(chosen);
    }
    let short = points.len() < count;
    Selection { points, gains, short }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::rng::seeded;

    fn pts(v: &[f64]) -> Vec<Point> {
        v.iter().map(|x| vec![*x]).collect()
    }

    #[test]
    fn farthest_examples() {
        let sel = select_farthest(&pts(&[0.0]), &pts(&[0.2, 0.5, 0.9]), 1);
        assert_eq!(sel.points, pts(&[0.9]));
        let sel = select_farthest(&pts(&[0.0]), &pts(&[0.2, 0.5, 0.9]), 2);
        assert_eq!(sel.points, pts(&[0.9, 0.5]));
        assert!(!sel.short);
    }

    #[test]
    fn farthest_degenerate_and_short() {
        let sel = select_farthest(&pts(&[0.0, 1.0]), &pts(&[1.0, 0.0]), 2);
        assert_eq!(sel.gains, vec![0.0, 0.0]);
        let sel = select_farthest(&pts(&[0.0]), &pts(&[0.5]), 3);
        assert!(sel.short);
        assert_eq!(sel.points.len(), 1);
    }

    #[test]
    fn zero_sigma_walk_stays() {
        let d = ConstrainedDomain::new(BoxDomain::unit(2));
        let e = rrw_endpoint(&[0.3, 0.3], 0.0, &WalkParams::default(), &d, &mut seeded(1)).unwrap();
        assert_eq!(e.point, vec![0.3, 0.3]);
    }

    #[test]
    fn walk_rejects_outside_start() {
        let d = ConstrainedDomain::new(BoxDomain::unit(1));
        assert!(rrw_endpoint(&[2.0], 0.1, &WalkParams::default(), &d, &mut seeded(1)).is_err());
    }

    #[test]
    fn forced_zero_sigma_copies_points() {
        let d = ConstrainedDomain::new(BoxDomain::unit(2));
        let s = SampleSet::from_points(vec![vec![0.1, 0.2], vec![0.7, 0.4]]).unwrap();
        let walk = WalkParams { n_c: 1, steps: 1, ..Default::default() };
        let c = generate_candidates_with_sigma(&s, &walk, &d, 0.0, &mut seeded(0), Exec::Sequential).unwrap();
        assert_eq!(c, s.points().to_vec());
    }

    #[test]
    fn candidate_count_matches_paper_figure() {
        let d = ConstrainedDomain::new(BoxDomain::unit(2));
        let s = SampleSet::from_points(crate::geometry::halton_points(9, 2, 1, &[])).unwrap();
        let walk = WalkParams { n_c: 100, steps: 10, ..Default::default() };
        let c = generate_candidates(&s, &walk, &d, &mut seeded(4), Exec::Parallel).unwrap();
        assert_eq!(c.len(), 900);
        assert!(c.iter().all(|p| d.contains(p)));
    }

    #[test]
    fn exec_modes_agree() {
        let d = ConstrainedDomain::new(BoxDomain::unit(3));
        let s = SampleSet::from_points(crate::geometry::halton_points(7, 3, 1, &[])).unwrap();
        let walk = WalkParams { n_c: 20, ..Default::default() };
        let a = generate_candidates(&s, &walk, &d, &mut seeded(9), Exec::Sequential).unwrap();
        let b = generate_candidates(&s, &walk, &d, &mut seeded(9), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
