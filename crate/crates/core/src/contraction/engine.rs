use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::diagnostics::{diagnostic_qk, error_gate, estimate_contraction_factor, percentile, QkDiagnostic};
use super::RunConfig;
use crate::error::{Error, Result};
use crate::error_estimation::{chebyshev_bound, cv_error_stats, default_folds, ErrorStats};
use crate::geometry::{
    generate_candidates, halton_points, max_nn_distance, select_farthest, BoxDomain, ConstrainedDomain, Normalizer, Point,
    SampleSet, WalkParams,
};
use crate::rng::{seeded, StreamRng};
use crate::surrogate::{fit, minimize_model, noise_floor, FitConfig, Hyperparameters, KernelModel, MinimizeConfig, SublevelConstraint};

/// Points closer than this (in normalised units) count as already sampled.
const DUPLICATE_TOL: f64 = 1e-9;
/// A model minimiser closer to a sample than this fraction of the largest
/// nearest-neighbour distance adds nothing the model can resolve.
const ARGMIN_RESOLUTION: f64 = 1e-3;

/// A contracted domain together with the map back to user coordinates.
#[derive(Clone, Debug)]
pub struct SearchDomain {
    pub normalizer: Normalizer,
    /// Domain in normalised coordinates.
    pub domain: ConstrainedDomain,
}

impl SearchDomain {
    pub fn level(&self) -> usize {
        self.domain.level()
    }

    /// Membership of a point given in user coordinates.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(&self.normalizer.to_normalized(x))
    }

    pub fn at_level(&self, k: usize) -> SearchDomain {
        SearchDomain { normalizer: self.normalizer.clone(), domain: self.domain.truncated(k) }
    }
}

/// State between inner iterations: the current domain and the samples inside it.
#[derive(Clone, Debug)]
pub struct ContractionState {
    pub domain: ConstrainedDomain,
    pub samples: SampleSet,
    pub f_best: f64,
    pub n_total: usize,
}

impl ContractionState {
    pub fn new(bbox: BoxDomain) -> Self {
        ContractionState {
            domain: ConstrainedDomain::new(bbox),
            samples: SampleSet::new(),
            f_best: f64::INFINITY,
            n_total: 0,
        }
    }

    pub fn level(&self) -> usize {
        self.domain.level()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionOutcome {
    pub retained: usize,
    /// The best sample failed the new constraint and was kept anyway.
    pub incumbent_forced: bool,
}

/// Adds `{x : model(x) <= u}` to the domain and drops samples whose model
/// mean exceeds `u`. The best sample is always kept.
pub fn apply_contraction(state: &mut ContractionState, model: Arc<KernelModel>, u: f64) -> ContractionOutcome {
    let keep: Vec<bool> = state.samples.points().iter().map(|p| model.mean_at(p) <= u).collect();
    let best = state.samples.argmin();
    let incumbent_forced = best.is_some_and(|b| !keep[b]);
    state.samples.retain_indices(|i| keep[i] || Some(i) == best);
    state.domain.push(Arc::new(SublevelConstraint { model, threshold: u }));
    ContractionOutcome { retained: state.samples.len(), incumbent_forced }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionRecord {
    /// Level being left; the new domain has level `k + 1`.
    pub k: usize,
    pub model_size: usize,
    pub threshold: f64,
    pub bound: f64,
    pub cv_mean: f64,
    pub cv_std: f64,
    pub confidence: f64,
    pub inner_iters: usize,
    pub f_best_after: f64,
    pub n_total_after: usize,
    pub retained: usize,
    pub incumbent_forced: bool,
    pub hyper: Hyperparameters,
    pub model_min: f64,
    pub est_factor: Option<f64>,
    pub q_k: Option<QkDiagnostic>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based evaluation count.
    pub eval: usize,
    pub f_best: f64,
    pub level: usize,
    /// Size of the latest fitted model (0 before the first fit).
    pub model_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    Budget,
    NoncontractibleCap { level: usize },
    /// The threshold sits closer to the best value than the model's noise
    /// floor can resolve, so no further contraction can be certified.
    ResolutionLimit { level: usize },
    EvaluationError { index: usize, value: f64 },
    /// An internal step failed; results up to that point are kept.
    Failed { message: String },
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub records: Vec<ContractionRecord>,
    pub trace: Vec<TracePoint>,
    /// Final sample points in user coordinates.
    pub samples: Vec<Point>,
    pub sample_values: Vec<f64>,
    pub domain: SearchDomain,
    pub best_point: Option<Point>,
    pub best_value: f64,
    pub n_total: usize,
    pub termination: Termination,
}

impl RunResult {
    pub fn f_best(&self) -> f64 {
        self.best_value
    }
}

struct Engine<'a, F> {
    cfg: &'a RunConfig,
    objective: F,
    normalizer: Normalizer,
    state: ContractionState,
    rng: StreamRng,
    trace: Vec<TracePoint>,
    best_point: Option<Point>,
    model_size: usize,
}

enum Stop {
    Budget,
    Eval { index: usize, value: f64 },
}

impl<F: FnMut(&[f64]) -> f64> Engine<'_, F> {
    fn evaluate(&mut self, z: Point) -> std::result::Result<(), Stop> {
        if self.cfg.budget.is_some_and(|b| self.state.n_total >= b) {
            return Err(Stop::Budget);
        }
        let x = self.normalizer.to_original(&z);
        let v = (self.objective)(&x);
        self.state.n_total += 1;
        if !v.is_finite() {
            return Err(Stop::Eval { index: self.state.n_total, value: v });
        }
        if v < self.state.f_best {
            self.state.f_best = v;
            self.best_point = Some(x);
        }
        self.trace.push(TracePoint {
            eval: self.state.n_total,
            f_best: self.state.f_best,
            level: self.state.level(),
            model_size: self.model_size,
        });
        // duplicates are screened by the caller
        let _ = self.state.samples.push(z, v);
        Ok(())
    }

    fn argmin_is_new(&self, z: &[f64]) -> bool {
        let spacing = max_nn_distance(&self.state.samples).unwrap_or(0.0);
        self.state.samples.nearest_distance(z) > DUPLICATE_TOL.max(ARGMIN_RESOLUTION * spacing)
    }

    /// Samples that may seed walks: members of the current domain.
    fn walk_seeds(&self) -> SampleSet {
        let mut s = self.state.samples.clone();
        let members: Vec<bool> = s.points().iter().map(|p| self.state.domain.contains(p)).collect();
        s.retain_indices(|i| members[i]);
        s
    }

    fn candidates(&mut self) -> Result<Vec<Point>> {
        let seeds = self.walk_seeds();
        if seeds.is_empty() {
            return Ok(Vec::new());
        }
        let n_c = (self.cfg.max_candidates / seeds.len()).clamp(1, self.cfg.walk.n_c);
        let walk = WalkParams { n_c, ..self.cfg.walk };
        generate_candidates(&seeds, &walk, &self.state.domain, &mut self.rng, self.cfg.exec)
    }

    /// Low-discrepancy points in the domain, randomly rotated per run.
    fn bootstrap(&mut self, count: usize) -> Vec<Point> {
        let dim = self.state.domain.dim();
        let shift: Vec<f64> = (0..dim).map(|_| self.rng.random()).collect();
        let bbox = self.state.domain.bbox().clone();
        let mut out = Vec::new();
        let mut start = 1;
        while out.len() < count && start < 1 + 1000 * count as u64 {
            for u in halton_points(count, dim, start, &shift) {
                let z: Point = u.iter().zip(bbox.lower().iter().zip(bbox.upper())).map(|(t, (l, h))| l + t * (h - l)).collect();
                if out.len() < count && self.state.domain.contains(&z) {
                    out.push(z);
                }
            }
            start += count as u64;
        }
        out
    }

    fn run(mut self) -> RunResult {
        let mut records = Vec::new();
        let termination = self.levels(&mut records).unwrap_or_else(|e| Termination::Failed { message: e.to_string() });
        let domain = SearchDomain { normalizer: self.normalizer.clone(), domain: self.state.domain.clone() };
        let samples = self.state.samples.points().iter().map(|z| self.normalizer.to_original(z)).collect();
        RunResult {
            records,
            trace: self.trace,
            samples,
            sample_values: self.state.samples.values().to_vec(),
            domain,
            best_point: self.best_point,
            best_value: self.state.f_best,
            n_total: self.state.n_total,
            termination,
        }
    }

    fn levels(&mut self, records: &mut Vec<ContractionRecord>) -> Result<Termination> {
        let k_total = self.cfg.contractions;
        let mut warm: Option<Hyperparameters> = None;
        let fit_cfg = FitConfig {
            starts: self.cfg.hyper_starts,
            center: true,
            max_fit_points: Some(self.cfg.max_fit_points),
            exec: self.cfg.exec,
            ..Default::default()
        };
        let min_cfg = MinimizeConfig { starts: self.cfg.minimize_starts, exec: self.cfg.exec, ..Default::default() };

        for k in 0..k_total {
            let c_k = self.cfg.percentile.at(k, k_total);
            let t_k = self.cfg.confidence.at(k, k_total);
            let mut iter_inner = 0;
            loop {
                iter_inner += 1;

                let mut cands = Vec::new();
                let new_points = if self.state.samples.is_empty() {
                    self.bootstrap(self.cfg.batch)
                } else {
                    cands = self.candidates()?;
                    let existing = self.state.samples.points();
                    select_farthest(existing, &cands, self.cfg.batch)
                        .points
                        .into_iter()
                        .filter(|p| existing.iter().all(|e| crate::geometry::dist(e, p) > DUPLICATE_TOL))
                        .collect()
                };
                for z in new_points {
                    if let Err(stop) = self.evaluate(z) {
                        return Ok(stop.into());
                    }
                }

                let n = self.state.samples.len();
                if n < 2 {
                    if iter_inner >= self.cfg.max_iter_inner {
                        return Ok(Termination::NoncontractibleCap { level: k });
                    }
                    continue;
                }

                let points = self.state.samples.points().to_vec();
                let values = self.state.samples.values().to_vec();
                // later fits in a level start from the previous one and need fewer restarts
                let starts = if iter_inner == 1 { self.cfg.hyper_starts } else { self.cfg.refit_starts };
                let fit_cfg = FitConfig { warm_start: warm, starts, ..fit_cfg.clone() };
                let model = Arc::new(fit(&points, &values, &fit_cfg, &mut self.rng)?);
                warm = Some(*model.hyper());
                self.model_size = n;

                let folds = self.cfg.cv_folds.unwrap_or_else(|| default_folds(n)).min(n);
                let stats = cv_error_stats(&points, &values, model.hyper(), model.offset(), folds, &mut self.rng, self.cfg.exec)?;

                if cands.is_empty() {
                    cands = self.candidates()?;
                }
                if cands.is_empty() {
                    cands = points.iter().filter(|p| self.state.domain.contains(p)).cloned().collect();
                }
                let report = minimize_model(&model, &self.state.domain, &cands, &min_cfg);
                if self.argmin_is_new(&report.argmin) {
                    if let Err(stop) = self.evaluate(report.argmin.clone()) {
                        return Ok(stop.into());
                    }
                }

                let values_now = self.state.samples.values().to_vec();
                let u = percentile(&values_now, c_k)?;
                let f_min = self.state.f_best;
                let gate = error_gate(&stats, t_k, self.cfg.omega, u, f_min)?;
                if gate && iter_inner >= self.cfg.min_iter_inner {
                    let record = self.contract(k, &stats, t_k, u, model, report.value, iter_inner)?;
                    records.push(record);
                    break;
                }
                // below the surrogate's noise floor no amount of sampling passes the gate
                if iter_inner >= self.cfg.min_iter_inner.max(3)
                    && t_k * noise_floor(&values_now).sqrt() > self.cfg.omega * (u - f_min)
                {
                    return Ok(Termination::ResolutionLimit { level: k });
                }
                if iter_inner >= self.cfg.max_iter_inner {
                    return Ok(Termination::NoncontractibleCap { level: k });
                }
            }
        }

        Ok(Termination::Completed)
    }

    #[allow(clippy::too_many_arguments)]
    fn contract(
        &mut self,
        k: usize,
        stats: &ErrorStats,
        t_k: f64,
        u: f64,
        model: Arc<KernelModel>,
        model_min: f64,
        inner_iters: usize,
    ) -> Result<ContractionRecord> {
        let values = self.state.samples.values().to_vec();
        let q_k = diagnostic_qk(&values, u, model_min, self.cfg.omega).ok();
        let before = self.state.domain.clone();
        let model_size = model.len();
        let hyper = *model.hyper();
        let outcome = apply_contraction(&mut self.state, model, u);
        let est_factor = if self.cfg.factor_probes > 0 {
            let seed: u64 = self.rng.random();
            estimate_contraction_factor(&before, &self.state.domain, self.cfg.factor_probes, seed, self.cfg.exec)
                .ok()
                .map(|e| e.ratio)
        } else {
            None
        };
        Ok(ContractionRecord {
            k,
            model_size,
            threshold: u,
            bound: chebyshev_bound(stats, t_k).value,
            cv_mean: stats.mean,
            cv_std: stats.std,
            confidence: t_k,
            inner_iters,
            f_best_after: self.state.f_best,
            n_total_after: self.state.n_total,
            retained: outcome.retained,
            incumbent_forced: outcome.incumbent_forced,
            hyper,
            model_min,
            est_factor,
            q_k,
        })
    }
}

impl From<Stop> for Termination {
    fn from(s: Stop) -> Self {
        match s {
            Stop::Budget => Termination::Budget,
            Stop::Eval { index, value } => Termination::EvaluationError { index, value },
        }
    }
}

/// Runs the contraction method on `objective` over `bbox`.
///
/// Evaluation failures and budget exhaustion end the run early and are
/// reported through [`RunResult::termination`] with everything gathered so
/// far; only an invalid configuration is an error.
pub fn run<F>(config: &RunConfig, bbox: &BoxDomain, objective: F) -> Result<RunResult>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    if bbox.dim() > 32 {
        return Err(Error::Config("at most 32 dimensions are supported".into()));
    }
    let normalizer = Normalizer::new(bbox.clone());
    let engine = Engine {
        cfg: config,
        objective,
        state: ContractionState::new(normalizer.normalized_box()),
        normalizer,
        rng: seeded(config.seed),
        trace: Vec::new(),
        best_point: None,
        model_size: 0,
    };
    Ok(engine.run())
}
