use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use super::Hyperparameters;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{dist_sq, Constraint, Point};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// First jitter tried after a failed factorisation, relative to the signal variance.
const JITTER_START: f64 = 1e-10;
/// Largest jitter tried, relative to the signal variance.
const JITTER_MAX: f64 = 1e-4;
/// Noise floor relative to the squared value range.
pub const NOISE_FLOOR: f64 = 1e-10;

/// Smallest noise variance [`fit`] will consider for these values.
pub fn noise_floor(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi > lo {
        NOISE_FLOOR * (hi - lo) * (hi - lo)
    } else {
        0.0
    }
}

/// A fitted zero-mean GP (plus an optional constant offset) with a cached
/// Cholesky factor of `Psi = Phi + noise_var * I`.
#[derive(Clone)]
pub struct KernelModel {
    hyper: Hyperparameters,
    dim: usize,
    flat: Vec<f64>,
    values: Vec<f64>,
    offset: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl fmt::Debug for KernelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelModel")
            .field("hyper", &self.hyper)
            .field("n", &self.len())
            .field("dim", &self.dim)
            .field("offset", &self.offset)
            .field("jitter", &self.jitter)
            .finish()
    }
}

fn check_points(points: &[Point]) -> Result<usize> {
    let dim = points.first().map(Vec::len).ok_or_else(|| Error::domain("no training points"))?;
    if dim == 0 {
        return Err(Error::domain("training points must have dimension >= 1"));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::domain("training points have mixed dimensions"));
    }
    Ok(dim)
}

fn pairwise_dist_sq(points: &[Point]) -> DMatrix<f64> {
    let n = points.len();
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = dist_sq(&points[i], &points[j]);
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    d2
}

/// Factorises `Psi` for `h`, escalating diagonal jitter by x10 on failure.
fn factorize(d2: &DMatrix<f64>, h: &Hyperparameters) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = d2.nrows();
    let mut jitter = 0.0;
    loop {
        let psi = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                h.signal_var + h.noise_var + jitter
            } else {
                h.cov_from_dist_sq(d2[(i, j)])
            }
        });
        if let Some(c) = Cholesky::new(psi) {
            return Ok((c, jitter));
        }
        let next = if jitter == 0.0 { JITTER_START * h.signal_var } else { jitter * 10.0 };
        if next > JITTER_MAX * h.signal_var * (1.0 + 1e-9) {
            return Err(Error::IllConditioned { jitter: jitter.max(JITTER_START * h.signal_var) });
        }
        jitter = next;
    }
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> f64 {
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * y.len() as f64 * LN_2PI
}

/// `-1/2 f^T Psi^-1 f - 1/2 log|Psi| - N/2 log 2pi` for a zero-mean GP.
pub fn log_marginal_likelihood(h: &Hyperparameters, points: &[Point], values: &[f64]) -> Result<f64> {
    h.validate()?;
    check_points(points)?;
    if points.len() != values.len() {
        return Err(Error::domain("points and values differ in length"));
    }
    let (chol, _) = factorize(&pairwise_dist_sq(points), h)?;
    Ok(lml_from_factor(&chol, &DVector::from_column_slice(values)))
}

impl KernelModel {
    /// Builds the model for fixed hyperparameters. Values are fitted after
    /// subtracting `offset`, which is added back on prediction.
    pub fn with_hyper(points: &[Point], values: &[f64], hyper: Hyperparameters, offset: f64) -> Result<Self> {
        hyper.validate()?;
        let dim = check_points(points)?;
        if points.len() != values.len() {
            return Err(Error::domain("points and values differ in length"));
        }
        let d2 = pairwise_dist_sq(points);
        Self::from_parts(points, values, dim, &d2, hyper, offset)
    }

    fn from_parts(
        points: &[Point],
        values: &[f64],
        dim: usize,
        d2: &DMatrix<f64>,
        hyper: Hyperparameters,
        offset: f64,
    ) -> Result<Self> {
        let (chol, jitter) = factorize(d2, &hyper)?;
        let y = DVector::from_iterator(values.len(), values.iter().map(|v| v - offset));
        let alpha = chol.solve(&y);
        Ok(KernelModel {
            hyper,
            dim,
            flat: points.iter().flatten().copied().collect(),
            values: values.to_vec(),
            offset,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn hyper(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Diagonal jitter the factorisation needed beyond the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    pub fn train_values(&self) -> &[f64] {
        &self.values
    }

    pub fn train_points(&self) -> impl Iterator<Item = &[f64]> {
        self.flat.chunks_exact(self.dim)
    }

    /// Log marginal likelihood of the training data under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let y = DVector::from_iterator(self.len(), self.values.iter().map(|v| v - self.offset));
        lml_from_factor(&self.chol, &y)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::domain(format!("point has dimension {}, model has {}", x.len(), self.dim)));
        }
        Ok(())
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.train_points().map(|p| self.hyper.cov_from_dist_sq(dist_sq(p, x))),
        )
    }

    /// Posterior mean without the dimension check.
    #[inline]
    pub fn mean_at(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, a) in self.train_points().zip(self.alpha.iter()) {
            acc += a * (-self.hyper.inv_lengthscale_sq * dist_sq(p, x)).exp();
        }
        self.offset + self.hyper.signal_var * acc
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.mean_at(x))
    }

    /// Posterior variance, clamped below at zero.
    pub fn predict_variance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let k = self.cross_cov(x);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .ok_or_else(|| Error::domain("singular factor"))?;
        Ok((self.hyper.signal_var - v.norm_squared()).max(0.0))
    }

    /// Gradient of the posterior mean, without the dimension check.
    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let s2 = self.hyper.inv_lengthscale_sq;
        for (p, a) in self.train_points().zip(self.alpha.iter()) {
            let w = a * (-s2 * dist_sq(p, x)).exp();
            for ((gi, xi), pi) in g.iter_mut().zip(x).zip(p) {
                *gi += w * (xi - pi);
            }
        }
        let scale = -2.0 * s2 * self.hyper.signal_var;
        g.iter_mut().for_each(|v| *v *= scale);
        g
    }

    pub fn mean_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.gradient_at(x))
    }
}

/// `{x : mean(x) <= threshold}` as a domain constraint.
#[derive(Clone, Debug)]
pub struct SublevelConstraint {
    pub model: Arc<KernelModel>,
    pub threshold: f64,
}

impl Constraint for SublevelConstraint {
    fn value(&self, x: &[f64]) -> f64 {
        self.model.mean_at(x) - self.threshold
    }
}

/// Settings for the multi-start marginal-likelihood search.
#[derive(Clone, Debug)]
pub struct FitConfig {
    pub starts: usize,
    /// Likelihood evaluations allowed per start.
    pub max_evals_per_start: usize,
    /// Initial coordinate step in natural-log units.
    pub initial_step: f64,
    /// A coordinate stops once its step shrinks below this.
    pub min_step: f64,
    /// Diameter of the region the points live in; scales the lengthscale
    /// bounds. Unset means the largest distance between training points.
    pub domain_diameter: Option<f64>,
    /// Fit deviations from the mean value instead of the raw values.
    pub center: bool,
    /// Replaces the heuristic first start.
    pub warm_start: Option<Hyperparameters>,
    /// Above this many points the likelihood search runs on a random subset
    /// of this size; the returned model still uses every point.
    pub max_fit_points: Option<usize>,
    pub exec: Exec,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 8,
            max_evals_per_start: 150,
            initial_step: 1.0,
            min_step: 1e-3,
            domain_diameter: None,
            center: false,
            warm_start: None,
            max_fit_points: None,
            exec: Exec::Parallel,
        }
    }
}

/// Box in log-hyperparameter space: (signal_var, inv_lengthscale_sq, noise_var).
#[derive(Clone, Copy, Debug)]
struct LogBounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl LogBounds {
    fn clamp(&self, t: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| t[i].clamp(self.lo[i], self.hi[i]))
    }
}

fn to_hyper(t: [f64; 3]) -> Hyperparameters {
    Hyperparameters { signal_var: t[0].exp(), inv_lengthscale_sq: t[1].exp(), noise_var: t[2].exp() }
}

fn to_log(h: &Hyperparameters) -> [f64; 3] {
    [h.signal_var.ln(), h.inv_lengthscale_sq.ln(), h.noise_var.max(f64::MIN_POSITIVE).ln()]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Fits hyperparameters by multi-start coordinate-wise ascent of the log
/// marginal likelihood in log space, within bounds derived from the data.
pub fn fit<R: Rng + ?Sized>(points: &[Point], values: &[f64], cfg: &FitConfig, rng: &mut R) -> Result<KernelModel> {
    let dim = check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(Error::domain("fit needs at least 2 points"));
    }
    if values.len() != n {
        return Err(Error::domain("points and values differ in length"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("training values must be finite"));
    }
    let d2 = pairwise_dist_sq(points);
    for i in 0..n {
        for j in 0..i {
            if d2[(i, j)] == 0.0 {
                return Err(Error::domain("training points must be pairwise distinct"));
            }
        }
    }

    let offset = if cfg.center { values.iter().sum::<f64>() / n as f64 } else { 0.0 };
    if let Some(cap) = cfg.max_fit_points.filter(|c| n > (*c).max(2)) {
        let mut idx = rand::seq::index::sample(rng, n, cap).into_vec();
        idx.sort_unstable();
        let sub_points: Vec<Point> = idx.iter().map(|&i| points[i].clone()).collect();
        let sub_values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let sub = fit(&sub_points, &sub_values, &FitConfig { max_fit_points: None, ..cfg.clone() }, rng)?;
        return KernelModel::from_parts(points, values, dim, &d2, *sub.hyper(), offset);
    }
    let y = DVector::from_iterator(n, values.iter().map(|v| v - offset));
    let mean_y = y.mean();
    let var = y.iter().map(|v| (v - mean_y).powi(2)).sum::<f64>() / n as f64;
    let second_moment = y.norm_squared() / n as f64;
    let var_ref = if var > 0.0 {
        var
    } else if second_moment > 0.0 {
        second_moment
    } else {
        1.0
    };
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let range = if hi > lo { hi - lo } else { var_ref.sqrt() };
    let floor = NOISE_FLOOR * range * range;
    let diam2 = match cfg.domain_diameter {
        Some(d) => d * d,
        None => d2.iter().fold(0.0, |a: f64, b| a.max(*b)),
    };
    let bounds = LogBounds {
        lo: [(1e-4 * var_ref).ln(), (1.0 / diam2).ln(), floor.ln()],
        hi: [(1e4 * var_ref).ln(), (1e6 / diam2).ln(), var_ref.max(floor).ln()],
    };

    let objective = |t: [f64; 3]| -> f64 {
        match factorize(&d2, &to_hyper(t)) {
            Ok((chol, _)) => {
                let v = lml_from_factor(&chol, &y);
                if v.is_finite() {
                    v
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let typical = median((0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| d2[(i, j)]).collect());
    let heuristic = bounds.clamp([var_ref.ln(), (1.0 / typical).ln(), (floor * 1e2).ln()]);
    // remaining starts sweep the lengthscale range, alternating low and
    // moderate noise, so flat likelihoods do not trap every start in one mode
    let fixed: Vec<[f64; 3]> = match cfg.warm_start {
        Some(w) => vec![bounds.clamp(to_log(&w)), heuristic],
        None => vec![heuristic],
    };
    let sweep = cfg.starts.max(1).saturating_sub(fixed.len());
    let phase: f64 = rng.random();
    let starts: Vec<[f64; 3]> = fixed
        .into_iter()
        .take(cfg.starts.max(1))
        .chain((0..sweep).map(|j| {
            let pos = (j as f64 + phase) / sweep as f64;
            let noise = if j % 2 == 0 { floor * 1e2 } else { 0.1 * var_ref };
            bounds.clamp([var_ref.ln(), bounds.lo[1] + pos * (bounds.hi[1] - bounds.lo[1]), noise.ln()])
        }))
        .collect();

    let results = cfg.exec.map(starts.len(), |i| coordinate_ascent(starts[i], &bounds, cfg, &objective));
    let mut best: Option<([f64; 3], f64)> = None;
    for (t, v) in results {
        if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    let (t, _) = best.ok_or_else(|| Error::Fit("no start produced a factorisable covariance".into()))?;
    KernelModel::from_parts(points, values, dim, &d2, to_hyper(t), offset)
}

fn coordinate_ascent(
    start: [f64; 3],
    bounds: &LogBounds,
    cfg: &FitConfig,
    objective: &(impl Fn([f64; 3]) -> f64 + Sync),
) -> ([f64; 3], f64) {
    let mut t = start;
    let mut best = objective(t);
    let mut evals = 1;
    let mut step = [cfg.initial_step; 3];
    while evals < cfg.max_evals_per_start && step.iter().any(|s| *s >= cfg.min_step) {
        for c in 0..3 {
            if step[c] < cfg.min_step || evals >= cfg.max_evals_per_start {
                continue;
            }
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let mut trial = t;
                trial[c] += dir * step[c];
                trial = bounds.clamp(trial);
                if trial[c] == t[c] {
                    continue;
                }
                let v = objective(trial);
                evals += 1;
                if v > best {
                    best = v;
                    t = trial;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step[c] *= 0.5;
            }
        }
    }
    (t, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn h(sf: f64, s2: f64, sn: f64) -> Hyperparameters {
        Hyperparameters { signal_var: sf, inv_lengthscale_sq: s2, noise_var: sn }
    }

    #[test]
    fn single_point_likelihood() {
        let l = log_marginal_likelihood(&h(0.75, 1.0, 0.25), &[vec![0.3]], &[0.0]).unwrap();
        assert!((l + 0.5 * LN_2PI).abs() < 1e-14);
        let l = log_marginal_likelihood(&h(0.75, 1.0, 0.25), &[vec![0.3]], &[1.0]).unwrap();
        assert!((l - (-0.5 - 0.5 * LN_2PI)).abs() < 1e-14);
    }

    #[test]
    fn two_point_likelihood_closed_form() {
        let hp = h(1.3, 2.0, 0.1);
        let (x1, x2) = (vec![0.1, 0.2], vec![0.5, -0.3]);
        let (f1, f2) = (0.7, -1.1);
        let c = 1.3 * (-2.0 * dist_sq(&x1, &x2)).exp();
        let a = 1.3 + 0.1;
        let det = a * a - c * c;
        let quad = (a * f1 * f1 - 2.0 * c * f1 * f2 + a * f2 * f2) / det;
        let expect = -0.5 * quad - 0.5 * det.ln() - LN_2PI;
        let got = log_marginal_likelihood(&hp, &[x1, x2], &[f1, f2]).unwrap();
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn zero_data_gives_zero_mean() {
        let pts: Vec<Point> = (0..6).map(|i| vec![i as f64 / 5.0 - 0.5]).collect();
        let m = fit(&pts, &[0.0; 6], &FitConfig::default(), &mut seeded(1)).unwrap();
        assert!(m.alpha().iter().all(|a| *a == 0.0));
        for x in [-0.4, 0.0, 0.33, 3.0] {
            assert_eq!(m.predict_mean(&[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let pts: Vec<Point> = (0..12).map(|i| vec![(i as f64 * 0.37).sin() * 0.5, (i as f64 * 0.73).cos() * 0.5]).collect();
        let vals: Vec<f64> = pts.iter().map(|p| p[0] * p[0] - p[1]).collect();
        let a = fit(&pts, &vals, &FitConfig::default(), &mut seeded(5)).unwrap();
        let b = fit(&pts, &vals, &FitConfig::default(), &mut seeded(5)).unwrap();
        assert_eq!(a.hyper(), b.hyper());
        let seq = FitConfig { exec: Exec::Sequential, ..Default::default() };
        let c = fit(&pts, &vals, &seq, &mut seeded(5)).unwrap();
        assert_eq!(a.hyper(), c.hyper());
    }

    #[test]
    fn fit_rejects_bad_input() {
        let cfg = FitConfig::default();
        assert!(fit(&[vec![0.0]], &[1.0], &cfg, &mut seeded(0)).is_err());
        assert!(fit(&[vec![0.0], vec![0.0]], &[1.0, 2.0], &cfg, &mut seeded(0)).is_err());
        assert!(fit(&[vec![0.0], vec![1.0]], &[1.0, f64::NAN], &cfg, &mut seeded(0)).is_err());
    }

    #[test]
    fn single_point_model_predictions() {
        let m = KernelModel::with_hyper(&[vec![0.2, 0.2]], &[-1.0], h(1.0, 4.0, 1e-12), 0.0).unwrap();
        assert!((m.predict_mean(&[0.2, 0.2]).unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(m.mean_gradient(&[0.2, 0.2]).unwrap(), vec![0.0, 0.0]);
        assert!(m.predict_mean(&[50.0, 50.0]).unwrap().abs() < 1e-12);
        assert!((m.predict_variance(&[50.0, 50.0]).unwrap() - 1.0).abs() < 1e-6);
        assert!(m.predict_variance(&[0.2, 0.2]).unwrap() <= 1e-8);
        assert!(m.predict_mean(&[0.2]).is_err());
    }

    #[test]
    fn symmetric_pair_midpoint() {
        let pts = [vec![-0.25], vec![0.25]];
        let m = KernelModel::with_hyper(&pts, &[1.0, -1.0], h(1.0, 10.0, 1e-10), 0.0).unwrap();
        assert!(m.predict_mean(&[0.0]).unwrap().abs() < 1e-14);
        let m = KernelModel::with_hyper(&pts, &[0.5, 0.5], h(1.0, 10.0, 1e-10), 0.0).unwrap();
        assert!(m.mean_gradient(&[0.0]).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn jitter_rescues_rank_deficient_kernel() {
        // a flat kernel on 3 points is rank one
        let m = KernelModel::with_hyper(
            &[vec![0.0], vec![0.5], vec![1.0]],
            &[0.0, 1.0, 2.0],
            h(1.0, 0.0, 0.0),
            0.0,
        )
        .unwrap();
        assert!(m.jitter() > 0.0);
    }

    #[test]
    fn offset_shifts_predictions() {
        let pts = [vec![0.0], vec![0.5]];
        let a = KernelModel::with_hyper(&pts, &[3.0, 5.0], h(1.0, 4.0, 1e-10), 4.0).unwrap();
        assert!((a.predict_mean(&[100.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!((a.predict_mean(&[0.0]).unwrap() - 3.0).abs() < 1e-6);
    }
}
