use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::Point;
use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::domain("box must have dimension >= 1"));
        }
        if lower.len() != upper.len() {
            return Err(Error::domain(format!(
                "bound dimensions differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::domain(format!("invalid bounds on axis {i}: [{lo}, {hi}]")));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn unit(dim: usize) -> Self {
        Self::cube(dim, 0.0, 1.0).expect("valid unit cube")
    }

    /// Cube centred at the origin with Euclidean diameter exactly 1.
    pub fn centered_unit_diameter(dim: usize) -> Self {
        let half = 0.5 / (dim as f64).sqrt();
        Self::cube(dim, -half, half).expect("valid cube")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l)
    }

    pub fn diameter(&self) -> f64 {
        self.widths().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.widths().product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }

    pub fn center(&self) -> Point {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

/// A scalar inequality `value(x) <= 0` cutting down a box.
pub trait Constraint: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
}

/// Wraps a closure as a [`Constraint`].
pub struct FnConstraint<F> {
    f: F,
    label: &'static str,
}

impl<F> FnConstraint<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(label: &'static str, f: F) -> Self {
        FnConstraint { f, label }
    }
}

impl<F> fmt::Debug for FnConstraint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FnConstraint").field(&self.label).finish()
    }
}

impl<F> Constraint for FnConstraint<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// A box cut down by an ordered chain of constraints. The chain is
/// append-only, so the domain at level `k` is the box plus the first `k`
/// constraints and every level is nested in the one before.
#[derive(Clone, Debug)]
pub struct ConstrainedDomain {
    bbox: BoxDomain,
    constraints: Vec<Arc<dyn Constraint>>,
}

impl ConstrainedDomain {
    pub fn new(bbox: BoxDomain) -> Self {
        ConstrainedDomain { bbox, constraints: Vec::new() }
    }

    pub fn bbox(&self) -> &BoxDomain {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn level(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Arc<dyn Constraint>] {
        &self.constraints
    }

    pub fn push(&mut self, c: Arc<dyn Constraint>) {
        self.constraints.push(c);
    }

    pub fn with_constraint(&self, c: Arc<dyn Constraint>) -> Self {
        let mut next = self.clone();
        next.push(c);
        next
    }

    /// The domain as it was at `level` (clamped to the current level).
    pub fn truncated(&self, level: usize) -> Self {
        ConstrainedDomain {
            bbox: self.bbox.clone(),
            constraints: self.constraints[..level.min(self.level())].to_vec(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        // newest constraints are usually the tightest, so test them first
        self.bbox.contains(x) && self.constraints.iter().rev().all(|c| c.value(x) <= 0.0)
    }

    /// Rejection-samples one member from the bounding box.
    pub fn sample_member<R: Rng + ?Sized>(&self, rng: &mut R, max_attempts: usize) -> Result<Point> {
        for _ in 0..max_attempts {
            let x = self.bbox.sample_uniform(rng);
            if self.contains(&x) {
                return Ok(x);
            }
        }
        Err(Error::DomainEmpty { attempts: max_attempts })
    }
}

/// Affine map from a user box onto the centred cube of diameter 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    original: BoxDomain,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Normalizer {
    pub fn new(original: BoxDomain) -> Self {
        let root_n = (original.dim() as f64).sqrt();
        let center = original.center();
        let scale = original.widths().map(|w| w * root_n).collect();
        Normalizer { original, center, scale }
    }

    pub fn original(&self) -> &BoxDomain {
        &self.original
    }

    pub fn normalized_box(&self) -> BoxDomain {
        BoxDomain::centered_unit_diameter(self.original.dim())
    }

    pub fn to_normalized(&self, x: &[f64]) -> Point {
        x.iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(v, (c, s))| (v - c) / s)
            .collect()
    }

    pub fn to_original(&self, z: &[f64]) -> Point {
        let mut x: Point = z
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(v, (c, s))| c + v * s)
            .collect();
        // round-off can push boundary points a hair outside
        self.original.project(&mut x);
        x
    }
}
