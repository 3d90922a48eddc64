use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use super::harness::{BenchmarkReport, RunSummary};
use crate::contraction::{percentile, RunConfig, TracePoint};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["eval_index", "f_best", "gap", "level", "model_size"];

#[derive(Serialize)]
struct Row {
    eval_index: usize,
    f_best: f64,
    gap: Option<f64>,
    level: usize,
    model_size: usize,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_rows<W: Write>(out: W, rows: impl IntoIterator<Item = Row>) -> Result<()> {
    // header comes from the Row field names
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per evaluation; `gap` is empty when the minimum is unknown.
pub fn write_run_csv<W: Write>(out: W, trace: &[TracePoint], f_star: Option<f64>) -> Result<()> {
    if trace.is_empty() {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        w.flush()?;
        return Ok(());
    }
    write_rows(
        out,
        trace.iter().map(|p| Row {
            eval_index: p.eval,
            f_best: p.f_best,
            gap: f_star.map(|f| p.f_best - f),
            level: p.level,
            model_size: p.model_size,
        }),
    )
}

fn trace_json(trace: &[TracePoint], f_star: Option<f64>) -> Value {
    trace
        .iter()
        .map(|p| {
            json!({
                "eval_index": p.eval,
                "f_best": p.f_best,
                "gap": f_star.map(|f| p.f_best - f),
                "level": p.level,
                "model_size": p.model_size,
            })
        })
        .collect()
}

pub fn run_json(config: &RunConfig, run: &RunSummary, f_star: Option<f64>) -> Value {
    json!({
        "config": config,
        "records": run.records,
        "trace": trace_json(&run.trace, f_star),
        "termination": {
            "reason": run.termination,
            "best_value": run.best_value,
            "best_point": run.best_point,
            "evaluations": run.n_total,
        },
    })
}

/// Medians across runs at each evaluation count, in the per-run CSV layout.
pub fn write_bench_csv<W: Write>(out: W, report: &BenchmarkReport) -> Result<()> {
    let at = |r: &RunSummary, e: usize| r.trace.iter().take_while(|p| p.eval <= e).last().copied();
    let rows: Vec<Row> = report
        .aggregate
        .iter()
        .map(|g| {
            let pts: Vec<TracePoint> = report.runs.iter().filter_map(|r| at(r, g.eval)).collect();
            let med = |f: &dyn Fn(&TracePoint) -> f64| {
                let v: Vec<f64> = pts.iter().map(f).collect();
                percentile(&v, 50.0).unwrap_or(0.0)
            };
            let offset = report.f_star.unwrap_or(0.0);
            Row {
                eval_index: g.eval,
                f_best: g.median + offset,
                gap: report.f_star.map(|_| g.median),
                level: med(&|p| p.level as f64).floor() as usize,
                model_size: med(&|p| p.model_size as f64).floor() as usize,
            }
        })
        .collect();
    write_rows(out, rows)
}

pub fn bench_json(report: &BenchmarkReport) -> Value {
    let records: Vec<Value> = report.runs.iter().map(|r| json!({"seed": r.seed, "records": r.records})).collect();
    let terminations: Vec<Value> = report
        .runs
        .iter()
        .map(|r| {
            json!({
                "seed": r.seed,
                "reason": r.termination,
                "flagged": r.flagged,
                "best_value": r.best_value,
                "evaluations": r.n_total,
            })
        })
        .collect();
    let traces: Vec<Value> =
        report.runs.iter().map(|r| json!({"seed": r.seed, "trace": trace_json(&r.trace, report.f_star)})).collect();
    // problem metadata rides in the config so the top level keeps four keys
    let mut config = serde_json::to_value(&report.config).expect("config serialises");
    if let Value::Object(map) = &mut config {
        map.insert("problem".into(), json!(report.problem));
        map.insert("dim".into(), json!(report.dim));
        map.insert("f_star".into(), json!(report.f_star));
        map.insert("seeds".into(), json!(report.seeds));
    }
    json!({
        "config": config,
        "records": records,
        "trace": {
            "aggregate": report.aggregate,
            "runs": traces,
            "baselines": report.baselines,
        },
        "termination": terminations,
    })
}
