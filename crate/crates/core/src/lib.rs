//! Linear model fitting under stationary colored noise.
//!
//! Measurements `m = J x + e` with `e` zero-mean Gaussian of Toeplitz
//! covariance `Omega_ij = R((i-j) dt)` are reduced by weighted least squares
//! `x* = (J'PJ)^-1 J'P m`. The crate provides
//!
//! * the general weighted estimator and its sandwich covariance ([`model`]),
//! * OLS and GLS in the time domain, GLS on the zero-extended record through
//!   an inverse generalized convolution, and the supporting checks
//!   ([`estimators`]),
//! * DTFT machinery on a band grid ([`spectral`]),
//! * PSD families, correlation, covariance and noise synthesis ([`noise`]),
//! * the single-template spectral estimator, the matched filter and PSD
//!   misspecification analysis ([`matched`]),
//! * a seeded, parallel Monte Carlo harness ([`montecarlo`]).
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! cover the common case.

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod matched;
pub mod model;
pub mod montecarlo;
pub mod noise;
mod quadrature;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use estimators::{
    check_covariance, gls_spectral, gls_spectral_metric, gls_time, loewner_leq, ols, ols_covariance_freq,
    ols_covariance_time, orthonormalize, orthonormalize_columns, relative_frobenius, relative_max_diff, relative_vec_diff,
    transitivity_residual, OrthonormalizedDesign,
};
pub use matched::{
    apply_filter, build_matched_filter, log_log_slope, matched_gain, misspecified_gls_1d, mismatch_scan,
    psd_mismatch_variance, spectral_gls_1d, MatchedFilter, MismatchReport, MismatchScan, Perturbation,
};
pub use model::{
    build_design_matrix, build_design_matrix_at, ls_covariance, ls_estimate, ls_estimate_with, ls_fit,
    weighted_inner, BasisSpec, ConditionReport, DesignMatrix, Estimate, Method, SampledSignal, SolvePath,
    WeightKind, WeightMatrix,
};
pub use montecarlo::{linear_estimator, monte_carlo, LinearEstimator, MonteCarloSummary, SpectralOptions};
pub use noise::{
    build_covariance, default_f_min, psd_to_correlation, synthesize_noise, NoiseModel, NoiseSpec, NoiseSynthesizer,
    Psd, PsdSpec, SynthesisPath, ToeplitzCovariance,
};
pub use scalar::{CMatrix, CVector, Complex, Real};
pub use spectral::{
    dtft, dtft_direct, gen_convolve, gen_deconvolve, grid_frequencies, idtft, inverse_kernel, matrix_scalar_product,
    parseval_product, Spectrum, ZeroExtendedSequence,
};

pub type SampledSignal64 = SampledSignal<f64>;
pub type DesignMatrix64 = DesignMatrix<f64>;
pub type WeightMatrix64 = WeightMatrix<f64>;
pub type Estimate64 = Estimate<f64>;
pub type NoiseModel64 = NoiseModel<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type Sequence64 = ZeroExtendedSequence<f64>;
pub type MatchedFilter64 = MatchedFilter<f64>;

pub type SampledSignal32 = SampledSignal<f32>;
pub type DesignMatrix32 = DesignMatrix<f32>;
pub type Estimate32 = Estimate<f32>;
pub type NoiseModel32 = NoiseModel<f32>;
