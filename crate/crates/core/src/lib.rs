#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Gradient-free methods for stochastic convex-concave saddle-point
//! problems: one-point and residual-feedback zero-order mirror descent,
//! a kernel-smoothed projected gradient method for higher-order smooth
//! problems, and the experiment harness around them.
//!
//! ```
//! use zoosaddle::{gen_matrix_game, run_zoopmd, EstimatorKind, GeometrySetup, NoiseModel, Normalization,
//!     RunOptions, StepSchedule};
//!
//! let game = gen_matrix_game(10, 10, 1, Normalization::MaxAbs).unwrap();
//! let problem = game.to_problem();
//! let geometry = GeometrySetup::entropy(10, 10).unwrap();
//! let schedule = StepSchedule::constant(0.05, 0.01).unwrap();
//! let noise = NoiseModel::gaussian(0.01).unwrap();
//! let out = run_zoopmd(&problem, &noise, &geometry, EstimatorKind::Standard, &schedule, 500, 7,
//!     &RunOptions::default()).unwrap();
//! assert_eq!(out.oracle_calls, 1002);
//! ```

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod oracle;
pub mod point;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use estimators::{estimate_kernel, estimate_residual, estimate_standard, GradEstimate, ResidualState};
pub use geometry::{a_q_squared, prox_step, DomainSpec, DualExponent, GeometryKind, GeometrySetup};
pub use kernels::{build_legendre_kernel, kernel_constant, KernelConstant, SmoothingKernel};
pub use oracle::{NoiseModel, NoisyOracle, ProblemMeta, ProblemSpec, XiDistribution};
pub use point::BlockPoint;
pub use problems::{gen_matrix_game, make_quadratic_saddle, MatrixGame, Normalization, QuadraticSaddle};
pub use rng::{sample_sphere, Direction, SeededRng};
pub use solvers::{
    derive_schedule, regularize, run_kernel_zospg, run_zoopmd, EstimatorKind, RunLog, RunOptions, RunOutput,
    ScheduleCase, StepSchedule,
};
