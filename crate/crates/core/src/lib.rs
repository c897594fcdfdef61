//! Root barriers for the Skorokhod embedding problem.
//!
//! The crate computes the regular Root barrier of a centered, integrable
//! probability measure by solving the obstacle problem
//!
//! ```text
//! min(u - v_mu, d_t u - 1/2 d_xx u) = 0,   u(0, x) = -|x|
//! ```
//!
//! with an explicit monotone finite-difference scheme, then reads the barrier
//! off the contact set `{u = v_mu}`. On top of the solver it provides:
//!
//! * [`measure`]: centered measures (atoms plus piecewise-linear densities),
//!   their potential functions and the `y -> sqrt(lambda) y` image measures;
//! * [`pde`]: the time-space mesh, the CFL check and the obstacle solver;
//! * [`barrier`]: barrier extraction, regularisation, the self-similar scaling
//!   `r_lambda(x) = lambda r_1(x / sqrt(lambda))`, the `r(x)/x^2` monotonicity
//!   test and set inclusion between barriers;
//! * [`volterra`]: an independent route to continuous barriers of symmetric,
//!   atom-free measures through the Volterra integral equation;
//! * [`montecarlo`]: hitting-time simulation with reproducible per-path
//!   streams, plus the embedding, martingale, scaling and mean-time checks.
//!
//! Loops that are data parallel (Monte Carlo paths, solves for several scale
//! parameters, wide grid rows) go through [`exec::Execution`], which uses
//! rayon when the `parallel` feature is enabled and runs sequentially
//! otherwise. Results are identical in both modes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod exec;
pub mod measure;
pub mod montecarlo;
pub mod pde;
pub mod report;
pub mod volterra;

pub use barrier::{Barrier, BarrierTime};
pub use exec::Execution;
pub use measure::{ExampleMeasure, Measure};
pub use pde::{SolverGrid, ValueField};
