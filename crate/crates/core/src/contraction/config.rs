use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::WalkParams;

/// A per-level parameter: one value for every level, an explicit list, or the
/// linear ramp `ramp * k / K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    PerLevel(Vec<f64>),
    Ramp { ramp: f64 },
}

impl Schedule {
    pub fn at(&self, k: usize, levels: usize) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PerLevel(v) => v[k],
            Schedule::Ramp { ramp } => ramp * k as f64 / levels as f64,
        }
    }

    fn check(&self, name: &str, levels: usize, ok: impl Fn(f64) -> bool) -> Result<()> {
        let values: Vec<f64> = match self {
            Schedule::PerLevel(v) => {
                if v.len() != levels {
                    return Err(Error::Config(format!(
                        "{name} schedule has {} entries for {levels} contractions",
                        v.len()
                    )));
                }
                v.clone()
            }
            _ => (0..levels).map(|k| self.at(k, levels)).collect(),
        };
        match values.iter().find(|v| !ok(**v)) {
            Some(bad) => Err(Error::Config(format!("{name} value {bad} out of range"))),
            None => Ok(()),
        }
    }
}

/// Parameters of one contraction run. Field names double as the keys of the
/// TOML config file; every key is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Number of contractions K.
    pub contractions: usize,
    /// Points added per detection, m.
    pub batch: usize,
    pub min_iter_inner: usize,
    /// Inner iterations allowed per level before the run stops as noncontractible.
    pub max_iter_inner: usize,
    /// Error-bound factor in (0, 1].
    pub omega: f64,
    /// Percentile c_k of the sample values used as threshold, in (0, 100).
    pub percentile: Schedule,
    /// Confidence parameter t_k.
    pub confidence: Schedule,
    #[serde(flatten)]
    pub walk: WalkParams,
    /// Caps `n_c * N`; `n_c` is lowered as the sample set grows.
    pub max_candidates: usize,
    /// Cross-validation folds; unset means 10, or leave-one-out below 10 points.
    pub cv_folds: Option<usize>,
    /// Likelihood-search starts for the first fit of each level.
    pub hyper_starts: usize,
    /// Starts for later fits within a level, which are warm-started.
    pub refit_starts: usize,
    pub minimize_starts: usize,
    /// Likelihood searches on larger sample sets use a random subset of this size.
    pub max_fit_points: usize,
    pub seed: u64,
    /// Maximum number of objective evaluations.
    pub budget: Option<usize>,
    /// Box probes per level for the Monte-Carlo contraction-factor estimate; 0 disables it.
    pub factor_probes: usize,
    pub exec: Exec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            contractions: 10,
            batch: 2,
            min_iter_inner: 1,
            max_iter_inner: 100,
            omega: 1.0,
            percentile: Schedule::Constant(50.0),
            confidence: Schedule::Constant(2.5),
            walk: WalkParams::default(),
            max_candidates: 2000,
            cv_folds: None,
            hyper_starts: 8,
            refit_starts: 2,
            minimize_starts: 5,
            max_fit_points: 200,
            seed: 0,
            budget: None,
            factor_probes: 0,
            exec: Exec::Parallel,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let k = self.contractions;
        if k == 0 {
            return Err(Error::Config("contractions must be >= 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if self.min_iter_inner == 0 || self.max_iter_inner < self.min_iter_inner {
            return Err(Error::Config("need 1 <= min_iter_inner <= max_iter_inner".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config(format!("omega {} not in (0, 1]", self.omega)));
        }
        self.percentile.check("percentile", k, |c| c > 0.0 && c < 100.0)?;
        self.confidence.check("confidence", k, |t| t >= 0.0 && t.is_finite())?;
        self.walk.validate()?;
        if self.max_candidates == 0 || self.hyper_starts == 0 || self.refit_starts == 0 || self.minimize_starts == 0 {
            return Err(Error::Config("max_candidates and the start counts must be >= 1".into()));
        }
        if self.max_fit_points < 2 {
            return Err(Error::Config("max_fit_points must be >= 2".into()));
        }
        if let Some(s) = self.cv_folds {
            if s < 2 {
                return Err(Error::Config("cv_folds must be >= 2".into()));
            }
        }
        if self.budget == Some(0) {
            return Err(Error::Config("budget must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_schedule() {
        let s = Schedule::Ramp { ramp: 3.5 };
        assert_eq!(s.at(0, 10), 0.0);
        assert!((s.at(5, 10) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn toml_round_trip_and_partial() {
        let cfg = RunConfig { contractions: 7, confidence: Schedule::Ramp { ramp: 3.5 }, ..Default::default() };
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);

        let partial = RunConfig::from_toml("contractions = 3\nconfidence = [2.0, 3.0, 4.0]\nn_c = 50\n").unwrap();
        assert_eq!(partial.contractions, 3);
        assert_eq!(partial.walk.n_c, 50);
        assert_eq!(partial.confidence.at(2, 3), 4.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(RunConfig::from_toml("contractions = 3\nconfidence = [2.0]\n").is_err());
        assert!(RunConfig::from_toml("omega = 1.5\n").is_err());
        assert!(RunConfig::from_toml("percentile = 100.0\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("reduction = 1.0\n").is_err());
    }
}
