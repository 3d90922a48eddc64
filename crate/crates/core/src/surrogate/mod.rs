//! Gaussian-kernel GP regression used as the contraction surrogate.

mod kernel;
mod minimize;
mod model;

pub use kernel::{kernel_eval, Hyperparameters};
pub use minimize::{minimize_model, MinimizeConfig, MinimizeReport};
pub use model::{fit, log_marginal_likelihood, noise_floor, FitConfig, KernelModel, SublevelConstraint, NOISE_FLOOR};
