//! Cross-validated residual statistics and the Chebyshev error bound.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Point;
use crate::surrogate::{Hyperparameters, KernelModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub folds: usize,
    /// `prediction - value` for every training point, in input order.
    pub residuals: Vec<f64>,
    /// Folds whose complement could not be factorised; their points carry
    /// `global mean - value` residuals instead.
    pub fallback_folds: usize,
}

/// Random partition of `0..n` into `s` folds whose sizes differ by at most one.
pub fn partition_folds<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if s < 2 {
        return Err(Error::domain(format!("need at least 2 folds, got {s}")));
    }
    if s > n {
        return Err(Error::domain(format!("{s} folds requested for {n} points")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut folds = vec![Vec::with_capacity(n / s + 1); s];
    for (k, i) in idx.into_iter().enumerate() {
        folds[k % s].push(i);
    }
    Ok(folds)
}

/// Default fold count: 10, or leave-one-out below 10 points.
pub fn default_folds(n: usize) -> usize {
    n.min(10)
}

/// s-fold cross-validation with frozen hyperparameters. Each fold is predicted
/// from a model built on the other folds; no hyperparameters are refitted.
pub fn cv_error_stats<R: Rng + ?Sized>(
    points: &[Point],
    values: &[f64],
    hyper: &Hyperparameters,
    offset: f64,
    s: usize,
    rng: &mut R,
    exec: Exec,
) -> Result<ErrorStats> {
    let n = points.len();
    if values.len() != n {
        return Err(Error::domain("points and values differ in length"));
    }
    hyper.validate()?;
    let folds = partition_folds(n, s, rng)?;
    let global_mean = values.iter().sum::<f64>() / n as f64;

    let per_fold = exec.map(folds.len(), |f| {
        let held = &folds[f];
        let mut in_fold = vec![false; n];
        held.iter().for_each(|&i| in_fold[i] = true);
        let (train_p, train_v): (Vec<Point>, Vec<f64>) =
            (0..n).filter(|i| !in_fold[*i]).map(|i| (points[i].clone(), values[i])).unzip();
        match KernelModel::with_hyper(&train_p, &train_v, *hyper, offset) {
            Ok(m) => (held.iter().map(|&i| (i, m.mean_at(&points[i]) - values[i])).collect::<Vec<_>>(), false),
            Err(_) => (held.iter().map(|&i| (i, global_mean - values[i])).collect(), true),
        }
    });

    let mut residuals = vec![0.0; n];
    let mut fallback_folds = 0;
    for (entries, fell_back) in per_fold {
        fallback_folds += fell_back as usize;
        for (i, r) in entries {
            residuals[i] = r;
        }
    }
    let (mean, std) = mean_and_sample_std(&residuals);
    Ok(ErrorStats { mean, std, folds: s, residuals, fallback_folds })
}

pub fn mean_and_sample_std(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    /// `t < 2`, outside the range where the exponential coverage floor holds.
    pub below_regime: bool,
}

/// `|mu| + t * sigma`.
pub fn chebyshev_bound(stats: &ErrorStats, t: f64) -> Bound {
    Bound { value: stats.mean.abs() + t * stats.std, below_regime: t < 2.0 }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    /// Chebyshev floor `1 - 1/t^2`.
    pub chebyshev: f64,
    /// `exp(-1.2 / t^2)`, a lower bound on `chebyshev` for `t >= 2`, convenient
    /// for union-bound products across levels.
    pub exponential: f64,
}

pub fn coverage_floor(t: f64) -> Result<Coverage> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("confidence parameter must be > 0, got {t}")));
    }
    let inv = 1.0 / (t * t);
    Ok(Coverage { chebyshev: 1.0 - inv, exponential: (-1.2 * inv).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::geometry::dist_sq;

    #[test]
    fn fold_sizes() {
        let f = partition_folds(10, 10, &mut seeded(0)).unwrap();
        assert!(f.iter().all(|x| x.len() == 1));
        let f = partition_folds(10, 3, &mut seeded(0)).unwrap();
        let mut sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 4]);
        let mut all: Vec<usize> = f.into_iter().flatten().collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(partition_folds(3, 4, &mut seeded(0)).is_err());
        assert!(partition_folds(3, 1, &mut seeded(0)).is_err());
    }

    #[test]
    fn fold_determinism() {
        assert_eq!(partition_folds(37, 5, &mut seeded(8)).unwrap(), partition_folds(37, 5, &mut seeded(8)).unwrap());
    }

    #[test]
    fn zero_values_zero_stats() {
        let pts: Vec<Point> = (0..8).map(|i| vec![i as f64 * 0.1]).collect();
        let h = Hyperparameters { signal_var: 1.0, inv_lengthscale_sq: 10.0, noise_var: 1e-8 };
        let s = cv_error_stats(&pts, &[0.0; 8], &h, 0.0, 4, &mut seeded(1), Exec::Parallel).unwrap();
        assert_eq!((s.mean, s.std), (0.0, 0.0));
    }

    #[test]
    fn two_fold_closed_form() {
        let pts = vec![vec![0.0], vec![0.3], vec![0.7], vec![1.0]];
        let vals = [1.0, -0.5, 2.0, 0.25];
        let h = Hyperparameters { signal_var: 1.5, inv_lengthscale_sq: 3.0, noise_var: 0.01 };
        let stats = cv_error_stats(&pts, &vals, &h, 0.0, 2, &mut seeded(4), Exec::Sequential).unwrap();
        let folds = partition_folds(4, 2, &mut seeded(4)).unwrap();

        // 2x2 inverse by hand
        let k = |a: &[f64], b: &[f64]| 1.5 * (-3.0 * dist_sq(a, b)).exp();
        let mut expect = [0.0; 4];
        for held in &folds {
            let train: Vec<usize> = (0..4).filter(|i| !held.contains(i)).collect();
            let (i, j) = (train[0], train[1]);
            let a = 1.5 + 0.01;
            let c = k(&pts[i], &pts[j]);
            let det = a * a - c * c;
            let w_i = (a * vals[i] - c * vals[j]) / det;
            let w_j = (a * vals[j] - c * vals[i]) / det;
            for &p in held {
                expect[p] = k(&pts[p], &pts[i]) * w_i + k(&pts[p], &pts[j]) * w_j - vals[p];
            }
        }
        for (g, e) in stats.residuals.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
        let (m, s) = mean_and_sample_std(&expect);
        assert!((stats.mean - m).abs() < 1e-10 && (stats.std - s).abs() < 1e-10);
    }

    #[test]
    fn same_seed_same_residuals() {
        let pts: Vec<Point> = (0..20).map(|i| vec![(i as f64 * 0.618).fract()]).collect();
        let vals: Vec<f64> = pts.iter().map(|p| (6.0 * p[0]).sin()).collect();
        let h = Hyperparameters { signal_var: 1.0, inv_lengthscale_sq: 20.0, noise_var: 1e-8 };
        let a = cv_error_stats(&pts, &vals, &h, 0.0, 10, &mut seeded(3), Exec::Parallel).unwrap();
        let b = cv_error_stats(&pts, &vals, &h, 0.0, 10, &mut seeded(3), Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bound_examples() {
        let st = |mean, std| ErrorStats { mean, std, folds: 2, residuals: vec![], fallback_folds: 0 };
        assert_eq!(chebyshev_bound(&st(0.0, 1.0), 2.0).value, 2.0);
        assert_eq!(chebyshev_bound(&st(-0.5, 0.25), 4.0).value, 1.5);
        assert_eq!(chebyshev_bound(&st(-0.3, 0.0), 17.0).value, 0.3);
        assert!(chebyshev_bound(&st(0.0, 1.0), 1.5).below_regime);
    }

    #[test]
    fn coverage_examples() {
        let c = coverage_floor(2.0).unwrap();
        assert_eq!(c.chebyshev, 0.75);
        assert!((c.exponential - (-0.3f64).exp()).abs() < 1e-15);
        assert!(c.exponential <= c.chebyshev);
        assert!((coverage_floor(10.0).unwrap().chebyshev - 0.99).abs() < 1e-15);
        assert!((coverage_floor(1e9).unwrap().chebyshev - 1.0).abs() < 1e-15);
        assert!(coverage_floor(0.0).is_err());
    }
}
