//! Gamma-kernel density and regression estimation for non-negative data.
//!
//! The kernel at a target point `x` with bandwidth `h` is the
//! Gamma(`x/h + 1`, `h`) density. Its support matches the data's, so the
//! estimators carry no boundary bias at the origin. The crate provides the
//! kernel itself and its normalizing constants ([`kernel`]), the density,
//! numerator and regression estimators ([`estimators`]), closed-form bias and
//! limiting-variance formulas ([`asymptotics`]), and seeded i.i.d. and
//! ergodic sample generators ([`processes`]).
//!
//! The crate is `no_std` and needs only `alloc`. All floating-point math goes
//! through `libm`, so results do not depend on the platform math library.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod processes;
pub mod quadrature;
pub mod specfun;

pub use asymptotics::{
    bandwidth, density_bias, density_clt_variance, regression_bias, regression_clt_variance,
    standardize, Bandwidth, BandwidthSchedule, CurveModel, CurveModelBuilder,
};
pub use error::{Error, Result};
pub use estimators::{
    density_estimate, estimate_on_grid, numerator_estimate, regression_estimate, sup_error, Curve,
    EstimateSeries, EvaluationGrid, RegressionEstimate, Sample,
};
pub use kernel::{
    b_constant, gamma_expectation, kernel_eval, kernel_sup_bound, lipschitz_modulus,
    moment_identity_check, GammaKernel, GammaRef, KernelParams, SupBound,
};
pub use processes::{
    generate_ear1, generate_iid, generate_regression, sample_gamma, ProcessSpec, RegressionFn,
    SeededRng,
};
pub use specfun::{digamma, log_gamma, stirling_ratio};
