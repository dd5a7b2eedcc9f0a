//! Estimators as explicit linear operators and a seeded Monte Carlo harness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{gls_spectral_metric, orthonormalize_columns, Whitened};
use crate::linalg;
use crate::matched::spectral_gls_1d_operator;
use crate::model::{DesignMatrix, Method, WeightMatrix};
use crate::noise::{covariance_unchecked, NoiseModel, NoiseSynthesizer};
use crate::scalar::{CMatrix, CVector, Real};
use crate::spectral::ZeroExtendedSequence;

/// Band grid and zero-extension lengths, as multiples of the record length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub grid_factor: usize,
    pub pad_factor: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { grid_factor: 8, pad_factor: 4 }
    }
}

impl SpectralOptions {
    pub fn grid(&self, n: usize) -> usize {
        self.grid_factor * n
    }

    pub fn pad(&self, n: usize) -> usize {
        self.pad_factor * n
    }
}

/// A linear estimator `x* = A m` with its covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimator<T: Real> {
    pub method: Method,
    /// `A`, `p x N`.
    pub operator: CMatrix<T>,
    /// Covariance the method itself reports.
    pub reported: CMatrix<T>,
    /// `A Omega A'` under the true noise.
    pub predicted: CMatrix<T>,
}

/// Builds the operator of `method` for the design `j` under `model`.
pub fn linear_estimator<T: Real>(
    method: Method,
    j: &DesignMatrix<T>,
    model: &NoiseModel<T>,
    opts: SpectralOptions,
) -> Result<LinearEstimator<T>> {
    let n = j.n_samples();
    let omega = covariance_unchecked(model, n)?;
    let dense = omega.dense();
    let (operator, reported) = match method {
        Method::Ols => {
            let od = orthonormalize_columns(j.entries(), &WeightMatrix::identity(n))?;
            let a = od.operator();
            let v = od.sandwich(&dense);
            (a, v)
        }
        Method::GlsTime => {
            let w = Whitened::new(j, &omega)?;
            (w.operator(), w.od.gram_inverse())
        }
        Method::GlsSpectral => {
            let metric = gls_spectral_metric(model, n, opts.pad(n))?;
            let od = orthonormalize_columns(j.entries(), &metric)?;
            (od.operator(), od.gram_inverse())
        }
        Method::MatchedFilter => {
            if j.n_params() != 1 {
                return Err(Error::DimensionMismatch(format!(
                    "the matched filter fits one template, the model has {} parameters",
                    j.n_params()
                )));
            }
            let g = ZeroExtendedSequence::from_design(j);
            let a = spectral_gls_1d_operator(&g, model, n, j.origin_index(), opts.grid(n))?;
            let info = crate::matched::matched_gain(&g, model, opts.grid(n))?;
            (a, CMatrix::from_element(1, 1, crate::scalar::creal(info)))
        }
        Method::Weighted => {
            return Err(Error::DimensionMismatch("a custom weight needs an explicit matrix".into()))
        }
    };
    let predicted = linalg::symmetrize(&(&operator * &dense * operator.adjoint()));
    Ok(LinearEstimator { method, operator, reported, predicted })
}

/// Empirical behaviour of one method over the trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary<T: Real> {
    pub method: Method,
    pub trials: usize,
    /// `mean(x*) - x_true`.
    pub bias: CVector<T>,
    /// Sample covariance of `x*` (divisor `trials - 1`).
    pub empirical: CMatrix<T>,
    pub predicted: CMatrix<T>,
    pub reported: CMatrix<T>,
}

/// Runs `trials` noise draws through every method in `methods`.
///
/// Trial `t` uses the noise stream `(seed, t)`; the reduction runs in trial
/// order, so results do not depend on the thread count.
pub fn monte_carlo<T: Real>(
    j: &DesignMatrix<T>,
    x_true: &CVector<T>,
    model: &NoiseModel<T>,
    methods: &[Method],
    trials: usize,
    seed: u64,
    opts: SpectralOptions,
) -> Result<Vec<MonteCarloSummary<T>>> {
    if trials < 2 {
        return Err(Error::DimensionMismatch("Monte Carlo needs at least two trials".into()));
    }
    if x_true.len() != j.n_params() {
        return Err(Error::DimensionMismatch(format!(
            "{} true parameters for {} basis functions",
            x_true.len(),
            j.n_params()
        )));
    }
    let ests = methods
        .iter()
        .map(|&m| linear_estimator(m, j, model, opts))
        .collect::<Result<Vec<_>>>()?;
    let synth = NoiseSynthesizer::new(model, j.n_samples())?;
    let clean = j.signal(x_true);
    let draws: Vec<Vec<CVector<T>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let m = &clean + synth.draw(seed, t);
            ests.iter().map(|e| &e.operator * &m).collect()
        })
        .collect();
    let p = j.n_params();
    let scale = T::one() / T::lit(trials as f64);
    Ok(ests
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let mut mean = CVector::<T>::zeros(p);
            for d in &draws {
                mean += &d[k];
            }
            mean = mean.map(|z| z.scale(scale));
            let mut cov = CMatrix::<T>::zeros(p, p);
            for d in &draws {
                let r = &d[k] - &mean;
                cov += &r * r.adjoint();
            }
            let cov = cov.map(|z| z.scale(T::one() / T::lit((trials - 1) as f64)));
            MonteCarloSummary {
                method: e.method,
                trials,
                bias: mean - x_true,
                empirical: linalg::symmetrize(&cov),
                predicted: e.predicted,
                reported: e.reported,
            }
        })
        .collect())
}
