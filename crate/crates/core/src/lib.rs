//! Transformed Schatten-1 (TS1) matrix completion.
//!
//! The library is generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64` (and `f32` with the `F32` suffix).
//!
//! ```
//! use ts1_core::{gen_gaussian_lowrank, relative_error, sample_uniform, solve, Algorithm, RankInput, SolverConfig};
//!
//! let truth = gen_gaussian_lowrank::<f64>(60, 50, 4, 0.0, 42)?;
//! let problem = sample_uniform(&truth, 0.5, 43)?;
//! let config = SolverConfig::new(Algorithm::Ts1S2).with_rank(RankInput::Known(4));
//! let report = solve(&problem, &config)?;
//! assert!(relative_error(&report.x_opt, &truth.m_full)? < 1e-3);
//! # Ok::<(), ts1_core::Ts1Error>(())
//! ```

pub mod error;
pub mod io;
pub mod metrics;
pub mod operator;
pub mod problem;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod thresholding;

pub use error::{Result, Ts1Error};
pub use metrics::{mse, psnr, relative_error, RecoveryMetrics, SUCCESS_REL_ERR};
pub use operator::{b_mu_step, LinearOperator, SamplingOperator};
pub use problem::{
    add_noise, freedom_ratio, freedom_ratio_display, gen_gaussian_lowrank, image_to_lowrank_truth,
    max_recoverable_rank, sample_uniform, Descriptors, GenMeta,
};
pub use scalar::Real;
pub use solver::{solve, Algorithm, RankInput};
pub use spectral::{ky_fan_norm, partial_trace, ts1_penalty, ts1_prox_matrix};
pub use thresholding::{h_lambda, prox_scalar, rho_a, Regime};

pub type ThresholdParams = thresholding::ThresholdParams<f64>;
pub type SvdFactors = spectral::SvdFactors<f64>;
pub type ObjectiveContext = operator::ObjectiveContext<f64>;
pub type GroundTruth = problem::GroundTruth<f64>;
pub type MaskedMatrix = problem::MaskedMatrix<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type SolverState = solver::SolverState<f64>;
pub type SolveReport = solver::SolveReport<f64>;

pub type ThresholdParamsF32 = thresholding::ThresholdParams<f32>;
pub type SvdFactorsF32 = spectral::SvdFactors<f32>;
pub type ObjectiveContextF32 = operator::ObjectiveContext<f32>;
pub type GroundTruthF32 = problem::GroundTruth<f32>;
pub type MaskedMatrixF32 = problem::MaskedMatrix<f32>;
pub type SolverConfigF32 = solver::SolverConfig<f32>;
pub type SolverStateF32 = solver::SolverState<f32>;
pub type SolveReportF32 = solver::SolveReport<f32>;
