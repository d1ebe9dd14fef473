//! Damped proximal augmented Lagrangian solver for
//!
//! ```text
//! min f(x) + h(x)  s.t.  Ax = b,  g(x) ≤ 0
//! ```
//!
//! with weakly convex `f` (smooth, composite, or general), convex smooth `g`,
//! and `h` a box indicator plus an optional `ℓ1` term. Each outer iteration
//! approximately minimizes a proximal augmented Lagrangian with an
//! accelerated proximal gradient method (or a subgradient loop for general
//! objectives), then takes a damped multiplier step.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64`.
//!
//! ```
//! use dpalm::{dpalm_run, gen_lcqp, Config};
//!
//! let inst = gen_lcqp(2, 6, 1.0, 7).unwrap();
//! let cfg = Config { eps: 1e-3, ..Config::default() };
//! let run = dpalm_run(&inst, &cfg).unwrap();
//! assert!(run.k_final() > 0);
//! ```

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod al;
pub mod apg;
pub mod bench;
pub mod dpalm;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod scalar;

pub use crate::al::Case;
pub use crate::apg::apg_minimize;
pub use crate::dpalm::{dpalm_run, dpalm_run_from, Schedule, ScheduleRule, Status, StopMetric, TolerancePolicy};
pub use crate::error::{Error, Result};
pub use crate::instances::{gen_lcqp, gen_qcqp, gen_rnls, InstanceDoc};
pub use crate::scalar::Scalar;

pub type Instance = problem::ProblemInstance<f64>;
pub type Config = dpalm::SolverConfig<f64>;
pub type Run = dpalm::RunResult<f64>;
pub type Dual = al::DualState<f64>;
pub type Residuals = al::KktResidual<f64>;
pub type ApgOptions = apg::ApgConfig<f64>;
pub type Matrix = linalg::Mat<f64>;
