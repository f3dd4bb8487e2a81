//! State space model likelihoods by forward iteration of the filter operator
//! on a grid, with maximum likelihood fitting, regularity diagnostics and a
//! Monte Carlo harness for the asymptotic theory.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use ssm_mirfs::models::{kalman_loglik, LinGaussSpec};
//! use ssm_mirfs::{log_likelihood, ObservationSeq, StateSpaceModel};
//!
//! let spec = LinGaussSpec::new(0.8, 1.0, 1.0);
//! let (model, theta) = (spec.model(), spec.params().unwrap());
//! let obs = ObservationSeq::from_scalars(&[0.3, -0.2, 1.1, 0.4]).unwrap();
//! let grid = model.default_grid(theta.values()).unwrap();
//! let ll = log_likelihood(&model, &theta, &grid, &obs).unwrap();
//! assert!((ll.total - kalman_loglik(&spec, &obs).unwrap()).abs() < 1e-8);
//! ```

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod filter;
pub mod grid;
pub mod inference;
pub mod mclab;
pub mod model;
pub mod models;
pub mod obs;
pub mod operator;
pub mod params;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use filter::{variation_distance, FilterState};
pub use grid::{make_trapezoid_grid, GridKind, StateGrid};
pub use model::{simulate, SimulatedPath, StateSpaceModel};
pub use obs::ObservationSeq;
pub use operator::{
    apply_operator, brute_force_loglik, ergodic_average, initial_filter, log_likelihood,
    run_filter, FilterRecursion, LogLikBreakdown, TransitionKernel,
};
pub use params::{Bounds, IntervalMap, ParamVector};
