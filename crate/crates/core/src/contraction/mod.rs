//! The contraction loop: sample, model, bound the model error, and cut the
//! domain down to a model sublevel set once the bound allows it.

mod config;
mod diagnostics;
mod engine;

pub use config::{RunConfig, Schedule};
pub use diagnostics::{
    diagnostic_qk, error_gate, estimate_contraction_factor, percentile, FactorEstimate, QkDiagnostic,
};
pub use engine::{
    apply_contraction, run, ContractionOutcome, ContractionRecord, ContractionState, RunResult, SearchDomain,
    Termination, TracePoint,
};
