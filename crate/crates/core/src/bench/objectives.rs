use std::f64::consts::{E, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoxDomain, Point};

/// Pair distance below which the LJ potential is clamped.
pub const LJ_R_MIN: f64 = 0.5;
/// Half-width of the LJ coordinate box.
pub const LJ_HALF_WIDTH: f64 = 2.5;
pub const ACKLEY_HALF_WIDTH: f64 = 32.768;

fn check_box(name: &str, x: &[f64], bbox: &BoxDomain) -> Result<()> {
    if x.len() != bbox.dim() {
        return Err(Error::domain(format!("{name}: expected {} coordinates, got {}", bbox.dim(), x.len())));
    }
    if !bbox.contains(x) {
        return Err(Error::domain(format!("{name}: point {x:?} outside its box")));
    }
    Ok(())
}

fn branin_box() -> BoxDomain {
    BoxDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("valid box")
}

pub fn branin(x: &[f64]) -> Result<f64> {
    check_box("branin", x, &branin_box())?;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let inner = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
    Ok(inner * inner + 10.0 * (1.0 - t) * x[0].cos() + 10.0)
}

pub fn sin2(x: &[f64]) -> Result<f64> {
    check_box("sin2", x, &BoxDomain::cube(2, -5.0, 5.0)?)?;
    let (s1, s2) = (x[0].sin(), x[1].sin());
    Ok(1.0 + s1 * s1 + s2 * s2 - 0.1 * (-x[0] * x[0] - x[1] * x[1]).exp())
}

/// Ackley without a box check; callers decide the box.
fn ackley_raw(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

/// Ackley on its default box `[-32.768, 32.768]^n`.
pub fn ackley(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::domain("ackley needs at least one coordinate"));
    }
    check_box("ackley", x, &BoxDomain::cube(x.len(), -ACKLEY_HALF_WIDTH, ACKLEY_HALF_WIDTH)?)?;
    Ok(ackley_raw(x))
}

fn rosenbrock_raw(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2)).sum()
}

/// Rosenbrock on its default box `[-2.048, 2.048]^n`.
pub fn rosenbrock(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::domain("rosenbrock needs at least two coordinates"));
    }
    check_box("rosenbrock", x, &BoxDomain::cube(x.len(), -2.048, 2.048)?)?;
    Ok(rosenbrock_raw(x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LjEnergy {
    pub energy: f64,
    /// Some pair distance fell below [`LJ_R_MIN`] and was clamped.
    pub near_singular: bool,
}

/// Atom dimension `3s - 6`, or 1 for a dimer.
pub fn lj_dim(atoms: usize) -> usize {
    if atoms == 2 {
        1
    } else {
        3 * atoms - 6
    }
}

/// Cartesian positions from reduced coordinates: atom 1 at the origin,
/// atom 2 at `(c0, 0, 0)`, atom 3 at `(c1, c2, 0)`, then free triples.
pub fn lj_positions(coords: &[f64], atoms: usize) -> Result<Vec<[f64; 3]>> {
    if atoms < 2 {
        return Err(Error::domain("an LJ cluster needs at least two atoms"));
    }
    if coords.len() != lj_dim(atoms) {
        return Err(Error::domain(format!(
            "{atoms} atoms need {} coordinates, got {}",
            lj_dim(atoms),
            coords.len()
        )));
    }
    let mut pos = vec![[0.0; 3], [coords[0], 0.0, 0.0]];
    if atoms >= 3 {
        pos.push([coords[1], coords[2], 0.0]);
        pos.extend(coords[3..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
    }
    Ok(pos)
}

/// Total pair energy `sum r^-12 - 2 r^-6` in reduced units.
pub fn lj_cluster(coords: &[f64], atoms: usize) -> Result<LjEnergy> {
    let pos = lj_positions(coords, atoms)?;
    let mut energy = 0.0;
    let mut near_singular = false;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let mut r = crate::geometry::dist(&pos[i], &pos[j]);
            if r < LJ_R_MIN {
                r = LJ_R_MIN;
                near_singular = true;
            }
            let r6 = r.powi(-6);
            energy += r6 * r6 - 2.0 * r6;
        }
    }
    Ok(LjEnergy { energy, near_singular })
}

fn lj_box(atoms: usize) -> BoxDomain {
    let d = lj_dim(atoms);
    let mut lower = vec![-LJ_HALF_WIDTH; d];
    let upper = vec![LJ_HALF_WIDTH; d];
    // pinned radial coordinates: atom 2's x and atom 3's y
    lower[0] = 0.0;
    if atoms >= 3 {
        lower[2] = 0.0;
    }
    BoxDomain::new(lower, upper).expect("valid box")
}

/// Reduced coordinates of the unit regular tetrahedron.
pub fn lj_tetrahedron() -> Point {
    let h = 3f64.sqrt();
    vec![1.0, 0.5, h / 2.0, 0.5, h / 6.0, (2.0f64 / 3.0).sqrt()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Objective {
    Branin,
    Sin2,
    Ackley,
    Rosenbrock,
    Lj { atoms: usize },
}

/// A registered benchmark problem with its box and known optimum.
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub name: String,
    pub objective: Objective,
    pub bbox: BoxDomain,
    pub f_star: Option<f64>,
    pub minimizers: Vec<Point>,
}

pub const PROBLEMS: [&str; 5] = ["branin", "sin2", "ackley", "rosenbrock", "lj"];

impl ObjectiveSpec {
    /// Looks a problem up by name. `dim` is the dimension for `ackley` and
    /// `rosenbrock` and the atom count for `lj`; fixed-size problems accept
    /// only their own dimension.
    pub fn lookup(name: &str, dim: Option<usize>) -> Result<Self> {
        let fixed = |n: usize| match dim {
            Some(d) if d != n => Err(Error::Config(format!("{name} is {n}-dimensional, got --dim {d}"))),
            _ => Ok(()),
        };
        let spec = match name {
            "branin" => {
                fixed(2)?;
                ObjectiveSpec {
                    name: name.into(),
                    objective: Objective::Branin,
                    bbox: branin_box(),
                    f_star: Some(0.397887),
                    minimizers: vec![vec![-PI, 12.275], vec![PI, 2.275], vec![3.0 * PI, 2.475]],
                }
            }
            "sin2" => {
                fixed(2)?;
                ObjectiveSpec {
                    name: name.into(),
                    objective: Objective::Sin2,
                    bbox: BoxDomain::cube(2, -5.0, 5.0)?,
                    f_star: Some(0.9),
                    minimizers: vec![vec![0.0, 0.0]],
                }
            }
            "ackley" => {
                let n = dim.unwrap_or(4);
                if n == 0 {
                    return Err(Error::Config("ackley needs --dim >= 1".into()));
                }
                // the 10-D experiments use the narrower box
                let w = if n == 10 { 5.0 } else { ACKLEY_HALF_WIDTH };
                ObjectiveSpec {
                    name: name.into(),
                    objective: Objective::Ackley,
                    bbox: BoxDomain::cube(n, -w, w)?,
                    f_star: Some(0.0),
                    minimizers: vec![vec![0.0; n]],
                }
            }
            "rosenbrock" => {
                let n = dim.unwrap_or(2);
                if n < 2 {
                    return Err(Error::Config("rosenbrock needs --dim >= 2".into()));
                }
                let w = if n == 2 { 5.0 } else { 2.048 };
                ObjectiveSpec {
                    name: name.into(),
                    objective: Objective::Rosenbrock,
                    bbox: BoxDomain::cube(n, -w, w)?,
                    f_star: Some(0.0),
                    minimizers: vec![vec![1.0; n]],
                }
            }
            "lj" => {
                let atoms = dim.unwrap_or(4);
                if !(2..=5).contains(&atoms) {
                    return Err(Error::Config(format!("lj supports 2 to 5 atoms, got {atoms}")));
                }
                let (f_star, minimizers) = match atoms {
                    2 => (-1.0, vec![vec![1.0]]),
                    3 => (-3.0, vec![vec![1.0, 0.5, 3f64.sqrt() / 2.0]]),
                    4 => (-6.0, vec![lj_tetrahedron()]),
                    _ => (-9.103852, vec![]),
                };
                ObjectiveSpec {
                    name: name.into(),
                    objective: Objective::Lj { atoms },
                    bbox: lj_box(atoms),
                    f_star: Some(f_star),
                    minimizers,
                }
            }
            other => return Err(Error::Config(format!("unknown problem '{other}'"))),
        };
        Ok(spec)
    }

    /// Every problem at its default size.
    pub fn registry() -> Vec<ObjectiveSpec> {
        PROBLEMS.iter().map(|p| Self::lookup(p, None).expect("registered")).collect()
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    /// Evaluates inside this spec's box; outside it is a domain error.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_box(&self.name, x, &self.bbox)?;
        match self.objective {
            Objective::Branin => branin(x),
            Objective::Sin2 => sin2(x),
            Objective::Ackley => Ok(ackley_raw(x)),
            Objective::Rosenbrock => Ok(rosenbrock_raw(x)),
            Objective::Lj { atoms } => lj_cluster(x, atoms).map(|e| e.energy),
        }
    }

    pub fn gap(&self, f_best: f64) -> Option<f64> {
        self.f_star.map(|f| f_best - f)
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.bbox.lower();
        let hi = self.bbox.upper();
        let uniform = lo.iter().all(|v| *v == lo[0]) && hi.iter().all(|v| *v == hi[0]);
        let bounds = if uniform {
            format!("[{}, {}]^{}", lo[0], hi[0], self.dim())
        } else {
            let parts: Vec<String> = lo.iter().zip(hi).map(|(l, h)| format!("[{l}, {h}]")).collect();
            parts.join(" x ")
        };
        let fs = self.f_star.map_or("unknown".to_string(), |v| v.to_string());
        write!(f, "{:<11} dim={:<3} f*={:<10} box={}", self.name, self.dim(), fs, bounds)
    }
}
