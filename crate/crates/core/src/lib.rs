//! Eigenvalue-based spectrum sensing with multiple antennas.
//!
//! Sample covariance matrices of complex Gaussian snapshots, five blind and
//! semi-blind detectors, exact Wishart moments of John's sphericity statistic,
//! a moment-matched Beta approximation of its null distribution, and a
//! deterministic Monte Carlo engine.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta_approx;
pub mod detectors;
pub mod error;
pub mod exec;
pub mod matrix;
pub mod moments;
pub mod reference;
pub mod rng;
pub mod simulator;
pub mod special;

pub use beta_approx::{cdf_tj_approx, fit_generalized_beta, pfa, threshold_for_pfa, BetaFit};
pub use detectors::{decide, DetectorKind, Hypothesis, Orientation, Statistic};
pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::ComplexMatrix;
pub use moments::{moment_sum_lambda_sq, moment_tj, moment_trace_power, ExactRational, Moments};
pub use rng::RngStream;
pub use simulator::{EstimateWithCI, MonteCarlo, RocCurve, RocPoint, SamplingModel, Scenario};
