use super::{dist, Point};
use crate::error::{Error, Result};

/// Points with their objective values and a cached nearest-neighbour distance
/// per point. Points are kept pairwise distinct.
///
/// Sets built with [`SampleSet::from_points`] carry `NaN` values, which marks
/// them as not yet evaluated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    points: Vec<Point>,
    values: Vec<f64>,
    nn_dist: Vec<f64>,
}

impl SampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        let values = vec![f64::NAN; points.len()];
        Self::from_evaluated(points, values)
    }

    pub fn from_evaluated(points: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::domain("points and values differ in length"));
        }
        let mut s = SampleSet::new();
        for (p, v) in points.into_iter().zip(values) {
            s.push(p, v)?;
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nearest-neighbour distance of each point (`+inf` while `len() < 2`).
    pub fn nn_dist(&self) -> &[f64] {
        &self.nn_dist
    }

    /// Index of the smallest value, lowest index on ties. NaN values are skipped.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            match best {
                Some(b) if self.values[b] <= *v => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// Distance from `x` to the closest stored point.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        self.points.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min)
    }

    /// Appends a point, updating the neighbour cache in O(N).
    pub fn push(&mut self, point: Point, value: f64) -> Result<()> {
        if let Some(d) = self.dim() {
            if point.len() != d {
                return Err(Error::domain(format!(
                    "point has dimension {}, set has {d}",
                    point.len()
                )));
            }
        }
        let mut own = f64::INFINITY;
        for (p, nn) in self.points.iter().zip(self.nn_dist.iter_mut()) {
            let d = dist(p, &point);
            if d == 0.0 {
                return Err(Error::domain("duplicate sample point"));
            }
            own = own.min(d);
            *nn = nn.min(d);
        }
        self.points.push(point);
        self.values.push(value);
        self.nn_dist.push(own);
        Ok(())
    }

    /// Keeps the entries for which `keep(index)` is true and rebuilds the cache.
    pub fn retain_indices(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (i, (p, v)) in self.points.drain(..).zip(self.values.drain(..)).enumerate() {
            if keep(i) {
                points.push(p);
                values.push(v);
            }
        }
        self.points = points;
        self.values = values;
        self.rebuild_cache();
    }

    fn rebuild_cache(&mut self) {
        let n = self.points.len();
        self.nn_dist = vec![f64::INFINITY; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(&self.points[i], &self.points[j]);
                self.nn_dist[i] = self.nn_dist[i].min(d);
                self.nn_dist[j] = self.nn_dist[j].min(d);
            }
        }
    }
}
