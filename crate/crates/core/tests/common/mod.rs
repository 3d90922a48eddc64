//! Helpers and independent oracles shared by the integration targets.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use contropt::geometry::{generate_candidates, select_farthest, BoxDomain, ConstrainedDomain, FnConstraint, Point, SampleSet, WalkParams};
use contropt::rng::stream_rng;
use contropt::surrogate::Hyperparameters;
use contropt::Exec;

/// Five-pointed star in the unit square, `r < 0.28 + 0.14 cos(5 theta)`
/// around the centre. Nonconvex, with narrow arms.
pub fn star_domain() -> ConstrainedDomain {
    let star = FnConstraint::new("star", |x: &[f64]| {
        let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
        let r = (dx * dx + dy * dy).sqrt();
        r - (0.28 + 0.14 * (5.0 * dy.atan2(dx)).cos())
    });
    ConstrainedDomain::new(BoxDomain::unit(2)).with_constraint(Arc::new(star))
}

/// Grows a set from `start` to `total` points, one farthest candidate at a time.
pub fn grow(d: &ConstrainedDomain, start: Point, total: usize, walk: &WalkParams, seed: u64) -> SampleSet {
    let mut s = SampleSet::from_points(vec![start]).unwrap();
    let mut step = 0u64;
    while s.len() < total {
        let cands = generate_candidates(&s, walk, d, &mut stream_rng(seed, step), Exec::Parallel).unwrap();
        let pick = select_farthest(s.points(), &cands, 1);
        let p = pick.points.into_iter().next().expect("candidate pool is never empty");
        s.push(p, 0.0).unwrap();
        step += 1;
    }
    s
}

/// Sort and interpolate at position `c/100 * (N-1)`, written without the
/// library's helper.
pub fn percentile_oracle(values: &[f64], c: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = c / 100.0 * (v.len() as f64 - 1.0);
    let i = pos.floor() as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let w = pos - i as f64;
    (1.0 - w) * v[i] + w * v[i + 1]
}

/// Log marginal likelihood from an explicit inverse and an LU determinant.
pub fn dense_lml(h: &Hyperparameters, pts: &[Point], vals: &[f64]) -> f64 {
    let n = pts.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
        h.signal_var * (-h.inv_lengthscale_sq * d2).exp() + if i == j { h.noise_var } else { 0.0 }
    });
    let inv = k.clone().try_inverse().expect("invertible");
    let y = nalgebra::DVector::from_column_slice(vals);
    let quad = (y.transpose() * inv * &y)[(0, 0)];
    -0.5 * quad - 0.5 * k.determinant().ln() - 0.5 * n as f64 * (2.0 * PI).ln()
}

/// Jittered lattice in the unit square: every pair at least `0.5 / side` apart.
pub fn jittered_lattice(side: usize, seed: u64) -> Vec<Point> {
    use rand::Rng;
    let mut rng = stream_rng(seed, 0);
    let cell = 1.0 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            out.push(vec![
                (i as f64 + 0.25 + 0.5 * rng.random::<f64>()) * cell,
                (j as f64 + 0.25 + 0.5 * rng.random::<f64>()) * cell,
            ]);
        }
    }
    out
}
