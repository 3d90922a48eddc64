use super::KernelModel;
use crate::exec::Exec;
use crate::geometry::{dist, ConstrainedDomain, Point};

#[derive(Clone, Debug)]
pub struct MinimizeConfig {
    /// Best-ranked seeds refined by projected gradient descent.
    pub starts: usize,
    pub max_iters: usize,
    /// First trial step as a fraction of the box diameter.
    pub initial_step: f64,
    /// Stop once a step is shorter than this fraction of the box diameter.
    pub step_tol: f64,
    pub exec: Exec,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig { starts: 5, max_iters: 100, initial_step: 0.1, step_tol: 1e-9, exec: Exec::Parallel }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeReport {
    pub argmin: Point,
    pub value: f64,
    pub starts_used: usize,
    pub converged: bool,
}

struct Descent {
    point: Point,
    value: f64,
    converged: bool,
}

/// Minimises the model mean over `d`: ranks `candidates` and the model's own
/// training points inside `d` by mean, then refines the best `starts` of them
/// with projected gradient descent. Iterates are projected onto the box and
/// rejected when they leave `d`.
///
/// Ties in the ranking go to the lowest index, candidates first.
pub fn minimize_model(m: &KernelModel, d: &ConstrainedDomain, candidates: &[Point], cfg: &MinimizeConfig) -> MinimizeReport {
    let mut pool: Vec<Point> = candidates.to_vec();
    pool.extend(m.train_points().filter(|p| d.contains(p)).map(<[f64]>::to_vec));
    assert!(!pool.is_empty(), "minimize_model needs at least one candidate");

    let means = cfg.exec.map(pool.len(), |i| m.mean_at(&pool[i]));
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|a, b| means[*a].total_cmp(&means[*b]).then(a.cmp(b)));

    // distinct seeds only; duplicated points would repeat the same descent
    let mut seeds: Vec<usize> = Vec::new();
    for &i in &order {
        if seeds.len() >= cfg.starts.max(1) {
            break;
        }
        if seeds.iter().all(|&s| dist(&pool[s], &pool[i]) > 0.0) {
            seeds.push(i);
        }
    }

    let diameter = d.bbox().diameter();
    let runs = cfg.exec.map(seeds.len(), |k| {
        let i = seeds[k];
        descend(m, d, pool[i].clone(), means[i], diameter, cfg)
    });

    let mut best = Descent { point: pool[order[0]].clone(), value: means[order[0]], converged: false };
    let mut have = false;
    for r in runs {
        if !have || r.value < best.value {
            best = r;
            have = true;
        }
    }
    MinimizeReport {
        value: m.mean_at(&best.point),
        argmin: best.point,
        starts_used: seeds.len(),
        converged: best.converged,
    }
}

fn descend(m: &KernelModel, d: &ConstrainedDomain, mut x: Point, mut fx: f64, diameter: f64, cfg: &MinimizeConfig) -> Descent {
    let tol = cfg.step_tol * diameter;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let g = m.gradient_at(&x);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            converged = gnorm == 0.0;
            break;
        }
        let mut eta = cfg.initial_step * diameter / gnorm;
        let mut accepted = false;
        let mut moved = 0.0;
        while eta * gnorm > tol {
            let mut trial: Point = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
            d.bbox().project(&mut trial);
            let step = dist(&trial, &x);
            if step <= tol {
                break;
            }
            if d.contains(&trial) {
                let ft = m.mean_at(&trial);
                // Armijo condition on the projected step
                let decrease: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (t, xi))| gi * (xi - t)).sum();
                if ft <= fx - 1e-4 * decrease && ft < fx {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    moved = step;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !accepted || moved <= tol {
            converged = true;
            break;
        }
    }
    Descent { point: x, value: fx, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDomain;
    use crate::surrogate::{fit, FitConfig, Hyperparameters};
    use crate::rng::seeded;

    #[test]
    fn quadratic_minimum_located() {
        let pts: Vec<Point> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let vals: Vec<f64> = pts.iter().map(|p| (p[0] - 0.3).powi(2)).collect();
        let m = fit(&pts, &vals, &FitConfig::default(), &mut seeded(2)).unwrap();
        let d = ConstrainedDomain::new(BoxDomain::unit(1));
        let cands: Vec<Point> = (0..=1000).map(|i| vec![i as f64 / 1000.0]).collect();
        let r = minimize_model(&m, &d, &cands, &MinimizeConfig::default());
        assert!((r.argmin[0] - 0.3).abs() < 0.02, "{:?}", r);
        assert_eq!(r.value, m.mean_at(&r.argmin));
    }

    #[test]
    fn single_point_model() {
        let h = Hyperparameters { signal_var: 1.0, inv_lengthscale_sq: 5.0, noise_var: 1e-12 };
        let m = KernelModel::with_hyper(&[vec![0.6, 0.4]], &[-1.0], h, 0.0).unwrap();
        let d = ConstrainedDomain::new(BoxDomain::unit(2));
        let cands = vec![vec![0.1, 0.1], vec![0.9, 0.9], vec![0.5, 0.5]];
        let r = minimize_model(&m, &d, &cands, &MinimizeConfig::default());
        assert!(dist(&r.argmin, &[0.6, 0.4]) < 1e-6);
    }

    #[test]
    fn constant_model_returns_first_candidate() {
        let h = Hyperparameters { signal_var: 1.0, inv_lengthscale_sq: 5.0, noise_var: 1e-12 };
        let m = KernelModel::with_hyper(&[vec![0.5], vec![0.8]], &[2.0, 2.0], h, 2.0).unwrap();
        let d = ConstrainedDomain::new(BoxDomain::unit(1));
        let cands = vec![vec![0.1], vec![0.3]];
        let r = minimize_model(&m, &d, &cands, &MinimizeConfig::default());
        assert_eq!(r.argmin, vec![0.1]);
        assert!(r.converged);
    }
}
