use serde::{Deserialize, Serialize};

use super::baselines::{grid_search_baseline, random_search_baseline, MAX_GRID_POINTS};
use super::objectives::ObjectiveSpec;
use crate::contraction::{run, ContractionRecord, RunConfig, Termination, TracePoint};
use crate::contraction::percentile;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::stream_rng;

/// Objective closure for the engine: out-of-box or failed evaluations become
/// NaN, which ends the run with an evaluation error.
pub fn engine_objective(spec: &ObjectiveSpec) -> impl FnMut(&[f64]) -> f64 + '_ {
    move |x| spec.eval(x).unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub records: Vec<ContractionRecord>,
    pub trace: Vec<TracePoint>,
    pub termination: Termination,
    pub best_value: f64,
    pub best_point: Option<Point>,
    pub n_total: usize,
    /// The run stopped before completing every level.
    pub flagged: bool,
}

impl RunSummary {
    pub fn final_gap(&self, f_star: Option<f64>) -> f64 {
        self.best_value - f_star.unwrap_or(0.0)
    }
}

/// Spread of the runs at one evaluation count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub eval: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub name: String,
    pub budget: usize,
    pub aggregate: Vec<GapStats>,
}

/// Aggregated multi-seed result. Gaps are `f_best - f*`; for problems
/// without a known minimum the raw `f_best` is aggregated instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub problem: String,
    pub dim: usize,
    pub f_star: Option<f64>,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<GapStats>,
    pub baselines: Vec<BaselineSummary>,
}

impl BenchmarkReport {
    pub fn final_gaps(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.final_gap(self.f_star)).collect()
    }

    pub fn median_final_gap(&self) -> f64 {
        percentile(&self.final_gaps(), 50.0).unwrap_or(f64::NAN)
    }
}

/// Values `v[e-1]` at each evaluation count `e`, carrying the last value past
/// the end. Series must be nonempty.
fn value_at(series: &[f64], e: usize) -> f64 {
    series[(e - 1).min(series.len() - 1)]
}

/// Median, quartiles and mean across series on the axis `1..=max len`.
/// Empty series are skipped.
pub fn aggregate(series: &[Vec<f64>]) -> Vec<GapStats> {
    let live: Vec<&Vec<f64>> = series.iter().filter(|s| !s.is_empty()).collect();
    let len = live.iter().map(|s| s.len()).max().unwrap_or(0);
    (1..=len)
        .map(|e| {
            let vals: Vec<f64> = live.iter().map(|s| value_at(s, e)).collect();
            let q = |c| percentile(&vals, c).expect("nonempty");
            GapStats { eval: e, median: q(50.0), q1: q(25.0), q3: q(75.0), mean: vals.iter().sum::<f64>() / vals.len() as f64 }
        })
        .collect()
}

/// Best-so-far series indexed by evaluation count, with step interpolation
/// over any gaps in the trace.
fn dense_f_best(trace: &[TracePoint]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for p in trace {
        let fill = out.last().copied().unwrap_or(p.f_best);
        while out.len() + 1 < p.eval {
            out.push(fill);
        }
        out.push(p.f_best);
    }
    out
}

pub fn run_once(spec: &ObjectiveSpec, config: &RunConfig, seed: u64) -> Result<RunSummary> {
    let cfg = RunConfig { seed, ..config.clone() };
    let r = run(&cfg, &spec.bbox, engine_objective(spec))?;
    Ok(RunSummary {
        seed,
        flagged: r.termination != Termination::Completed,
        records: r.records,
        trace: r.trace,
        termination: r.termination,
        best_value: r.best_value,
        best_point: r.best_point,
        n_total: r.n_total,
    })
}

/// Runs the contraction method once per seed, concurrently, and aggregates
/// the gap curves. With `baselines`, random search (one run per seed) and a
/// grid search are given the largest evaluation count of any run.
pub fn run_benchmark(spec: &ObjectiveSpec, config: &RunConfig, seeds: &[u64], baselines: bool) -> Result<BenchmarkReport> {
    if seeds.is_empty() {
        return Err(Error::Config("need at least one repeat".into()));
    }
    config.validate()?;
    let runs = config.exec.map(seeds.len(), |i| run_once(spec, config, seeds[i]));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let offset = spec.f_star.unwrap_or(0.0);
    let to_gap = |s: Vec<f64>| s.into_iter().map(|v| v - offset).collect::<Vec<f64>>();
    let series: Vec<Vec<f64>> = runs.iter().map(|r| to_gap(dense_f_best(&r.trace))).collect();
    let aggregate_curve = aggregate(&series);

    let mut baseline_reports = Vec::new();
    if baselines {
        let budget = runs.iter().map(|r| r.n_total).max().unwrap_or(0).max(1);
        let random: Vec<Vec<f64>> = config.exec.map(seeds.len(), |i| {
            let mut rng = stream_rng(seeds[i], 0xba5e);
            to_gap(random_search_baseline(engine_objective(spec), &spec.bbox, budget, &mut rng))
        });
        baseline_reports.push(BaselineSummary { name: "random".into(), budget, aggregate: aggregate(&random) });

        let n = spec.dim() as f64;
        let nodes = ((budget as f64).powf(1.0 / n).floor() as usize).max(2);
        if (nodes as f64).powf(n) <= MAX_GRID_POINTS as f64 {
            let grid = grid_search_baseline(engine_objective(spec), &spec.bbox, nodes)?;
            let len = grid.len();
            baseline_reports.push(BaselineSummary { name: "grid".into(), budget: len, aggregate: aggregate(&[to_gap(grid)]) });
        }
    }

    Ok(BenchmarkReport {
        problem: spec.name.clone(),
        dim: spec.dim(),
        f_star: spec.f_star,
        config: config.clone(),
        seeds: seeds.to_vec(),
        runs,
        aggregate: aggregate_curve,
        baselines: baseline_reports,
    })
}
