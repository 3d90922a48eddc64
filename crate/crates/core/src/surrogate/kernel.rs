use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::dist_sq;

/// Hyperparameters of `phi(x, y) = signal_var * exp(-inv_lengthscale_sq * |x - y|^2)`
/// plus i.i.d. noise of variance `noise_var`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub signal_var: f64,
    pub inv_lengthscale_sq: f64,
    pub noise_var: f64,
}

impl Hyperparameters {
    pub fn new(signal_var: f64, inv_lengthscale_sq: f64, noise_var: f64) -> Result<Self> {
        let h = Hyperparameters { signal_var, inv_lengthscale_sq, noise_var };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_var > 0.0 && self.signal_var.is_finite()) {
            return Err(Error::domain(format!("signal variance must be > 0, got {}", self.signal_var)));
        }
        if !(self.inv_lengthscale_sq >= 0.0 && self.inv_lengthscale_sq.is_finite()) {
            return Err(Error::domain(format!(
                "inverse squared lengthscale must be >= 0, got {}",
                self.inv_lengthscale_sq
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::domain(format!("noise variance must be >= 0, got {}", self.noise_var)));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn cov_from_dist_sq(&self, d2: f64) -> f64 {
        self.signal_var * (-self.inv_lengthscale_sq * d2).exp()
    }
}

pub fn kernel_eval(x: &[f64], y: &[f64], h: &Hyperparameters) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("dimension mismatch: {} vs {}", x.len(), y.len())));
    }
    Ok(h.cov_from_dist_sq(dist_sq(x, y)))
}
