//! Global optimisation by contraction of the search domain.
//!
//! Each level samples the current domain quasi-uniformly, fits a Gaussian
//! kernel surrogate, bounds its error by cross-validation, and once the bound
//! is small enough relative to a percentile threshold `u`, replaces the
//! domain by `{x : model(x) <= u}`. With the bound holding, no global
//! minimiser is cut away.
//!
//! ```no_run
//! use contropt::contraction::{run, RunConfig};
//! use contropt::geometry::BoxDomain;
//!
//! let bbox = BoxDomain::cube(2, -5.0, 5.0).unwrap();
//! let cfg = RunConfig { contractions: 8, seed: 3, ..Default::default() };
//! let result = run(&cfg, &bbox, |x| x[0] * x[0] + 2.0 * x[1] * x[1]).unwrap();
//! println!("best {:.3e} after {} evaluations", result.best_value, result.n_total);
//! ```

pub mod bench;
pub mod cli;
pub mod contraction;
pub mod error;
pub mod error_estimation;
pub mod exec;
pub mod geometry;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
pub use exec::Exec;
