use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_estimation::{chebyshev_bound, ErrorStats};
use crate::exec::Exec;
use crate::geometry::ConstrainedDomain;
use crate::rng::stream_rng;

/// Percentile with linear interpolation between order statistics: position
/// `c / 100 * (N - 1)` in the sorted values, 0-indexed.
pub fn percentile(values: &[f64], c: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("percentile of an empty set"));
    }
    if !(0.0..=100.0).contains(&c) {
        return Err(Error::domain(format!("percentage {c} outside [0, 100]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = c / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(v[lo] + frac * (v[hi] - v[lo]))
}

/// Whether the cross-validated bound licenses a contraction:
/// `|mu| + t * sigma <= omega * (u - f_min)`.
pub fn error_gate(stats: &ErrorStats, t: f64, omega: f64, u: f64, f_min: f64) -> Result<bool> {
    if u < f_min {
        return Err(Error::domain(format!("threshold {u} below the best value {f_min}")));
    }
    Ok(chebyshev_bound(stats, t).value <= omega * (u - f_min))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QkDiagnostic {
    /// Largest `q` with `u - min(A*, f*) <= (f** - f*) / (1 + q)`; `-1` when
    /// the threshold sits at or below `min(A*, f*)`.
    pub q: f64,
    /// `(1 + omega)^2 / (1 + q)`; infinite for the `-1` sentinel.
    pub linear_factor: f64,
    /// The threshold leaves no room below it.
    pub non_contractive: bool,
    /// `linear_factor < 1`, i.e. the step provably shrinks the worst-case gap.
    pub guaranteed: bool,
}

/// Per-level rate diagnostic: `q = (f** - f*) / (u - min(A*, f*)) - 1`, where
/// `f*`, `f**` are the smallest and largest sample values, `u` the percentile
/// threshold and `A*` the model minimum.
pub fn diagnostic_qk(values: &[f64], u: f64, model_min: f64, omega: f64) -> Result<QkDiagnostic> {
    let (f_min, f_max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(f_max > f_min) {
        return Err(Error::domain("q_k undefined for constant sample values"));
    }
    let room = u - model_min.min(f_min);
    if room <= 0.0 {
        return Ok(QkDiagnostic { q: -1.0, linear_factor: f64::INFINITY, non_contractive: true, guaranteed: false });
    }
    let q = (f_max - f_min) / room - 1.0;
    let linear_factor = (1.0 + omega).powi(2) / (1.0 + q);
    Ok(QkDiagnostic { q, linear_factor, non_contractive: false, guaranteed: linear_factor < 1.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorEstimate {
    pub ratio: f64,
    pub hits_before: usize,
    pub hits_after: usize,
}

/// Monte-Carlo estimate of `vol(after) / vol(before)`: draws `probes` uniform
/// points from the bounding box of `before` and returns the fraction of its
/// members that are also members of `after`.
pub fn estimate_contraction_factor(
    before: &ConstrainedDomain,
    after: &ConstrainedDomain,
    probes: usize,
    seed: u64,
    exec: Exec,
) -> Result<FactorEstimate> {
    if probes == 0 {
        return Err(Error::domain("need at least one probe"));
    }
    const CHUNK: usize = 4096;
    let chunks = probes.div_ceil(CHUNK);
    let counts = exec.map(chunks, |c| {
        let mut rng = stream_rng(seed, c as u64);
        let n = CHUNK.min(probes - c * CHUNK);
        let (mut hb, mut ha) = (0usize, 0usize);
        for _ in 0..n {
            let x = before.bbox().sample_uniform(&mut rng);
            if before.contains(&x) {
                hb += 1;
                if after.contains(&x) {
                    ha += 1;
                }
            }
        }
        (hb, ha)
    });
    let (hits_before, hits_after) = counts.into_iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    if hits_before == 0 {
        return Err(Error::domain("contraction factor indeterminate: no probe landed in the earlier domain"));
    }
    Ok(FactorEstimate { ratio: hits_after as f64 / hits_before as f64, hits_before, hits_after })
}
