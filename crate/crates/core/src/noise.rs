//! Stationary Gaussian noise: power spectral density `S(f)`, correlation
//! `R(k dt)`, the Toeplitz covariance `Omega_ij = R((i-j) dt)` and seeded
//! synthesis of noise realizations.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SampledSignal;
use crate::quadrature::Rule;
use crate::scalar::{cis, creal, two_pi, CMatrix, CVector, Complex, Real};

/// Default relative PSD floor, `S_floor = 1e-12 * max S`.
pub const DEFAULT_FLOOR_REL: f64 = 1e-12;

/// Relative diagonal jitter allowed when factoring a covariance.
pub const COVARIANCE_JITTER_REL: f64 = 1e-10;

/// Serializable description of a PSD family (the JSON noise-spec format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PsdSpec {
    /// Flat `S = level`, or equivalently `S = sigma^2 dt`.
    White {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    /// `S = amplitude * max(|f|, f_min)^exponent`; `f_min` defaults to
    /// `1 / (10 N dt)`.
    PowerLaw {
        amplitude: f64,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f_min: Option<f64>,
    },
    /// `[frequency_hz, psd_value]` pairs, linearly interpolated. Tables
    /// without negative frequencies are mirrored to an even PSD.
    Tabulated { points: Vec<[f64; 2]> },
    /// Finite correlation sequence `R(0), R(dt), ...`; the PSD is its DTFT.
    Correlation { lags: Vec<f64> },
}

/// A PSD spec plus the optional relative floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub psd: PsdSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor_rel: Option<f64>,
}

impl NoiseSpec {
    pub fn white_sigma(sigma: f64) -> Self {
        Self { psd: PsdSpec::White { level: None, sigma: Some(sigma) }, floor_rel: None }
    }

    /// Instantiates the spec for records of `n` samples at step `dt`, with
    /// the correlation tabulated up to `lags`.
    pub fn build<T: Real>(&self, dt: T, n: usize, lags: usize) -> Result<NoiseModel<T>> {
        let psd = match &self.psd {
            PsdSpec::White { level, sigma } => match (level, sigma) {
                (Some(l), None) => Psd::White { level: T::lit(*l) },
                (None, Some(s)) => Psd::White { level: T::lit(s * s) * dt },
                _ => {
                    return Err(Error::InvalidPsd(
                        "white noise needs exactly one of 'level' or 'sigma'".into(),
                    ))
                }
            },
            PsdSpec::PowerLaw { amplitude, exponent, f_min } => Psd::PowerLaw {
                amplitude: T::lit(*amplitude),
                exponent: T::lit(*exponent),
                f_min: match f_min {
                    Some(f) => T::lit(*f),
                    None => default_f_min(n, dt),
                },
            },
            PsdSpec::Tabulated { points } => Psd::tabulated(
                &points.iter().map(|p| (T::lit(p[0]), T::lit(p[1]))).collect::<Vec<_>>(),
            )?,
            PsdSpec::Correlation { lags } => {
                Psd::Correlation { lags: lags.iter().map(|&r| creal(T::lit(r))).collect() }
            }
        };
        NoiseModel::with_floor(psd, dt, lags, T::lit(self.floor_rel.unwrap_or(DEFAULT_FLOOR_REL)))
    }
}

/// Low-frequency regularization of power laws: `1 / (10 N dt)`.
pub fn default_f_min<T: Real>(n: usize, dt: T) -> T {
    T::one() / (T::lit(10.0 * n.max(1) as f64) * dt)
}

/// Power spectral density families.
#[derive(Debug, Clone, PartialEq)]
pub enum Psd<T: Real> {
    White { level: T },
    PowerLaw { amplitude: T, exponent: T, f_min: T },
    /// Strictly increasing frequencies with nonnegative values.
    Tabulated { freqs: Vec<T>, values: Vec<T> },
    /// `R(0..=q)`; `R(-k) = conj R(k)`.
    Correlation { lags: Vec<Complex<T>> },
}

impl<T: Real> Psd<T> {
    /// Validates and, when no negative frequency is present, mirrors a table.
    pub fn tabulated(points: &[(T, T)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidPsd("tabulated PSD has no points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidPsd("tabulated frequencies must increase strictly".into()));
            }
        }
        if points.iter().any(|&(f, s)| !f.is_finite() || !s.is_finite() || s < T::zero()) {
            return Err(Error::InvalidPsd("tabulated PSD values must be finite and nonnegative".into()));
        }
        let mut pts: Vec<(T, T)> = points.to_vec();
        if pts[0].0 >= T::zero() {
            let mirrored: Vec<(T, T)> =
                pts.iter().rev().filter(|p| p.0 > T::zero()).map(|&(f, s)| (-f, s)).collect();
            pts = mirrored.into_iter().chain(pts).collect();
        }
        Ok(Psd::Tabulated {
            freqs: pts.iter().map(|p| p.0).collect(),
            values: pts.iter().map(|p| p.1).collect(),
        })
    }

    /// Raw `S(f)` before flooring.
    pub fn eval(&self, f: T, dt: T) -> T {
        match self {
            Psd::White { level } => *level,
            Psd::PowerLaw { amplitude, exponent, f_min } => {
                *amplitude * f.abs().max(*f_min).powf(*exponent)
            }
            Psd::Tabulated { freqs, values } => interpolate(freqs, values, f),
            Psd::Correlation { lags } => {
                let mut acc = lags[0].re;
                for (k, r) in lags.iter().enumerate().skip(1) {
                    let e = cis(-two_pi::<T>() * T::lit(k as f64) * f * dt);
                    acc += (*r * e).re * T::lit(2.0);
                }
                acc * dt
            }
        }
    }

    /// Points in the band where `S` or its derivative changes abruptly,
    /// including a geometric grading towards power-law corners.
    fn breakpoints(&self, dt: T) -> Vec<T> {
        let nyq = nyquist(dt);
        let mut out = vec![T::zero()];
        match self {
            Psd::PowerLaw { f_min, .. } if *f_min < nyq => {
                let mut f = *f_min;
                while f < nyq {
                    out.push(f);
                    out.push(-f);
                    f *= T::lit(2.0);
                }
            }
            Psd::Tabulated { freqs, .. } => out.extend(freqs.iter().copied()),
            _ => {}
        }
        out.retain(|f| f.abs() < nyq);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        out.dedup();
        out
    }

    fn validate(&self) -> Result<()> {
        match self {
            Psd::White { level } => {
                if !(*level >= T::zero()) || !level.is_finite() {
                    return Err(Error::InvalidPsd("white level must be finite and nonnegative".into()));
                }
            }
            Psd::PowerLaw { amplitude, exponent, f_min } => {
                if !(*amplitude > T::zero()) || !amplitude.is_finite() {
                    return Err(Error::InvalidPsd("power-law amplitude must be positive".into()));
                }
                if !(*exponent >= T::lit(-2.0) && *exponent <= T::lit(2.0)) {
                    return Err(Error::InvalidPsd(format!(
                        "power-law exponent {} outside [-2, 2]",
                        exponent.to_f64_lossy()
                    )));
                }
                if !(*f_min > T::zero()) || !f_min.is_finite() {
                    return Err(Error::InvalidPsd("power-law f_min must be positive".into()));
                }
            }
            Psd::Tabulated { .. } => {}
            Psd::Correlation { lags } => {
                if lags.is_empty() || !(lags[0].re > T::zero()) {
                    return Err(Error::InvalidPsd("correlation needs R(0) > 0".into()));
                }
                if lags.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::InvalidPsd("correlation lags must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

fn nyquist<T: Real>(dt: T) -> T {
    T::lit(0.5) / dt
}

fn interpolate<T: Real>(freqs: &[T], values: &[T], f: T) -> T {
    let n = freqs.len();
    if f <= freqs[0] {
        return values[0];
    }
    if f >= freqs[n - 1] {
        return values[n - 1];
    }
    let hi = freqs.partition_point(|&x| x <= f);
    let lo = hi - 1;
    let t = (f - freqs[lo]) / (freqs[hi] - freqs[lo]);
    values[lo] + (values[hi] - values[lo]) * t
}

/// `R(k dt) = int S(f) exp(i 2 pi k f dt) df` for `k = 0..=lags`.
///
/// White and finite-correlation spectra are handled in closed form; the
/// other families use composite Gauss-Legendre quadrature split at the
/// PSD's corners and fine enough to resolve the oscillation at the largest
/// lag.
pub fn psd_to_correlation<T: Real>(psd: &Psd<T>, lags: usize, dt: T) -> Vec<Complex<T>> {
    psd_to_correlation_floored(psd, lags, dt, T::zero())
}

fn psd_to_correlation_floored<T: Real>(psd: &Psd<T>, lags: usize, dt: T, floor: T) -> Vec<Complex<T>> {
    match psd {
        Psd::White { level } => {
            let mut r = vec![creal(T::zero()); lags + 1];
            r[0] = creal(level.max(floor) / dt);
            return r;
        }
        // the floor only guards divisions by S; the given lags stay exact
        Psd::Correlation { lags: given } => {
            let mut r = vec![creal(T::zero()); lags + 1];
            for (dst, src) in r.iter_mut().zip(given) {
                *dst = *src;
            }
            return r;
        }
        _ => {}
    }
    let nyq = nyquist(dt);
    let width = T::one() / (dt * T::lit((lags + 1) as f64));
    let rule = Rule::composite(-nyq, nyq, &psd.breakpoints(dt), width);
    let weighted: Vec<T> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&f, &w)| w * psd.eval(f, dt).max(floor))
        .collect();
    let step: Vec<Complex<T>> = rule.nodes.iter().map(|&f| cis(two_pi::<T>() * f * dt)).collect();
    let mut phase: Vec<Complex<T>> = vec![creal(T::one()); rule.nodes.len()];
    let mut r = Vec::with_capacity(lags + 1);
    for k in 0..=lags {
        if k > 0 && k % 64 == 0 {
            // refresh the rotation to stop rounding drift
            for (p, &f) in phase.iter_mut().zip(&rule.nodes) {
                *p = cis(two_pi::<T>() * T::lit(k as f64) * f * dt);
            }
        }
        let mut acc = creal(T::zero());
        for (p, &w) in phase.iter().zip(&weighted) {
            acc += p.scale(w);
        }
        r.push(acc);
        for (p, s) in phase.iter_mut().zip(&step) {
            *p *= *s;
        }
    }
    r
}

fn min_on_band<T: Real>(psd: &Psd<T>, dt: T) -> T {
    band_probe(psd, dt).into_iter().fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
}

fn max_on_band<T: Real>(psd: &Psd<T>, dt: T) -> T {
    band_probe(psd, dt).into_iter().fold(T::zero(), |a, b| a.max(b))
}

/// PSD values at the corners and on a fine uniform grid of the band.
fn band_probe<T: Real>(psd: &Psd<T>, dt: T) -> Vec<T> {
    let points = match psd {
        Psd::Correlation { lags } => 64 * (lags.len() + 1),
        _ => 1024,
    };
    let nyq = nyquist(dt);
    let mut fs: Vec<T> = (0..=points)
        .map(|j| -nyq + T::lit(2.0) * nyq * T::lit(j as f64) / T::lit(points as f64))
        .collect();
    fs.extend(psd.breakpoints(dt));
    if let Psd::PowerLaw { f_min, .. } = psd {
        fs.push(f_min.min(nyq));
    }
    fs.into_iter().map(|f| psd.eval(f, dt)).collect()
}

/// Stationary noise description: PSD, floor and tabulated correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T: Real> {
    psd: Psd<T>,
    dt: T,
    floor: T,
    max_psd: T,
    correlation: Vec<Complex<T>>,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(psd: Psd<T>, dt: T, lags: usize) -> Result<Self> {
        Self::with_floor(psd, dt, lags, T::lit(DEFAULT_FLOOR_REL))
    }

    /// Builds the model with `S_floor = floor_rel * max S` and the
    /// correlation tabulated for lags `0..=lags`.
    pub fn with_floor(psd: Psd<T>, dt: T, lags: usize, floor_rel: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidPsd("time step must be positive".into()));
        }
        if !(floor_rel >= T::zero()) || floor_rel >= T::one() {
            return Err(Error::InvalidPsd("floor_rel must lie in [0, 1)".into()));
        }
        psd.validate()?;
        let max_psd = match &psd {
            Psd::White { level } => *level,
            Psd::Tabulated { values, .. } => values.iter().fold(T::zero(), |a, &b| a.max(b)),
            _ => max_on_band(&psd, dt),
        };
        if let Psd::Correlation { .. } = psd {
            let low = min_on_band(&psd, dt);
            if low < -T::lit(1e-9) * max_psd {
                return Err(Error::InvalidPsd(format!(
                    "correlation sequence has a negative spectrum ({:.3e})",
                    low.to_f64_lossy()
                )));
            }
        }
        let floor = floor_rel * max_psd;
        let correlation = psd_to_correlation_floored(&psd, lags, dt, floor);
        Ok(Self { psd, dt, floor, max_psd, correlation })
    }

    pub fn white(level: T, dt: T, lags: usize) -> Result<Self> {
        Self::new(Psd::White { level }, dt, lags)
    }

    /// White noise with per-sample standard deviation `sigma`.
    pub fn white_sigma(sigma: T, dt: T, lags: usize) -> Result<Self> {
        Self::new(Psd::White { level: sigma * sigma * dt }, dt, lags)
    }

    pub fn power_law(amplitude: T, exponent: T, f_min: T, dt: T, lags: usize) -> Result<Self> {
        Self::new(Psd::PowerLaw { amplitude, exponent, f_min }, dt, lags)
    }

    pub fn from_correlation(lags: Vec<Complex<T>>, dt: T, tabulated: usize) -> Result<Self> {
        Self::new(Psd::Correlation { lags }, dt, tabulated)
    }

    pub fn psd_family(&self) -> &Psd<T> {
        &self.psd
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    pub fn max_psd(&self) -> T {
        self.max_psd
    }

    pub fn is_white(&self) -> bool {
        matches!(self.psd, Psd::White { .. })
    }

    /// Floored `S(f)`.
    pub fn psd(&self, f: T) -> T {
        self.psd.eval(f, self.dt).max(self.floor)
    }

    pub fn psd_on(&self, freqs: &[T]) -> Vec<T> {
        freqs.iter().map(|&f| self.psd(f)).collect()
    }

    /// `R(k dt)` for `k = 0..=lags()`.
    pub fn correlation(&self) -> &[Complex<T>] {
        &self.correlation
    }

    pub fn lags(&self) -> usize {
        self.correlation.len() - 1
    }

    /// `R(k dt)` for any integer `k`, zero beyond the tabulated range.
    pub fn correlation_at(&self, k: i64) -> Complex<T> {
        let idx = k.unsigned_abs() as usize;
        let r = self.correlation.get(idx).copied().unwrap_or_else(|| creal(T::zero()));
        if k < 0 {
            r.conj()
        } else {
            r
        }
    }

    /// Same PSD scaled by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        let psd = match &self.psd {
            Psd::White { level } => Psd::White { level: *level * c },
            Psd::PowerLaw { amplitude, exponent, f_min } => {
                Psd::PowerLaw { amplitude: *amplitude * c, exponent: *exponent, f_min: *f_min }
            }
            Psd::Tabulated { freqs, values } => {
                Psd::Tabulated { freqs: freqs.clone(), values: values.iter().map(|&v| v * c).collect() }
            }
            Psd::Correlation { lags } => Psd::Correlation { lags: lags.iter().map(|z| z.scale(c)).collect() },
        };
        let rel = if self.max_psd > T::zero() { self.floor / self.max_psd } else { T::zero() };
        Self::with_floor(psd, self.dt, self.lags(), rel)
    }

    /// `int S df` over `[lo, hi]` inside the band.
    pub fn integrate_psd(&self, lo: T, hi: T) -> T {
        if let Psd::White { level } = self.psd {
            return level.max(self.floor) * (hi - lo);
        }
        let rule = Rule::composite(lo, hi, &self.psd.breakpoints(self.dt), T::zero());
        rule.integrate(|f| self.psd(f))
    }

    /// Weights `w_j` with `sum_j w_j g(f_j) ~ int S g df` on the `m`-point
    /// band grid, for smooth band-periodic `g`.
    ///
    /// On each grid cell `g` is replaced by its degree-7 interpolant through
    /// the eight surrounding nodes, and the product with `S` is integrated
    /// exactly, so sharp features of `S` between nodes are not sampled away.
    pub fn grid_weights(&self, m: usize) -> Vec<T> {
        let h = T::one() / (T::lit(m as f64) * self.dt);
        if let Psd::White { level } = self.psd {
            return vec![level.max(self.floor) * h; m];
        }
        const OFFSETS: [i64; 8] = [-3, -2, -1, 0, 1, 2, 3, 4];
        let breaks = self.psd.breakpoints(self.dt);
        let mut w = vec![T::zero(); m];
        for (j, a) in crate::spectral::grid_frequencies(m, self.dt).into_iter().enumerate() {
            let rule = Rule::composite(a, a + h, &breaks, T::zero());
            for (&f, &wq) in rule.nodes.iter().zip(&rule.weights) {
                let s = self.psd(f) * wq;
                let t = (f - a) / h;
                for &o in &OFFSETS {
                    let mut l = T::one();
                    for &o2 in &OFFSETS {
                        if o2 != o {
                            l *= (t - T::lit(o2 as f64)) / T::lit((o - o2) as f64);
                        }
                    }
                    w[(j as i64 + o).rem_euclid(m as i64) as usize] += s * l;
                }
            }
        }
        w
    }

    /// Fails with `SpectralZero` unless `S > 0` on the given frequencies.
    pub fn ensure_positive_on(&self, freqs: &[T]) -> Result<Vec<T>> {
        let s = self.psd_on(freqs);
        if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !(**v > T::zero())) {
            return Err(Error::SpectralZero(format!(
                "PSD is {} at f = {}",
                v.to_f64_lossy(),
                freqs[i].to_f64_lossy()
            )));
        }
        Ok(s)
    }
}

/// Hermitian Toeplitz covariance `Omega_ij = R((i-j) dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCovariance<T: Real> {
    /// `R(0), R(dt), ..., R((N-1) dt)`.
    first_row: Vec<Complex<T>>,
}

impl<T: Real> ToeplitzCovariance<T> {
    /// Unchecked construction from `R(0..N)`.
    pub fn from_lags(first_row: Vec<Complex<T>>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::DimensionMismatch("covariance needs at least one lag".into()));
        }
        Ok(Self { first_row })
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[Complex<T>] {
        &self.first_row
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        if i >= j {
            self.first_row[i - j]
        } else {
            self.first_row[j - i].conj()
        }
    }

    pub fn dense(&self) -> CMatrix<T> {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Cholesky factor, retried with at most `1e-10 R(0)` of diagonal jitter.
    pub fn cholesky(&self) -> Result<(CMatrix<T>, T)> {
        let jitter = T::lit(COVARIANCE_JITTER_REL) * self.first_row[0].re;
        linalg::cholesky_jittered(&self.dense(), jitter)
            .map(|(c, j)| (c.unpack(), j))
            .ok_or_else(|| {
                Error::NotPsd("covariance is not positive semidefinite, even with jitter".into())
            })
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { first_row: self.first_row.iter().map(|z| z.scale(c)).collect() }
    }
}

/// `Omega` for `n` samples, checked to be positive semidefinite.
pub fn build_covariance<T: Real>(model: &NoiseModel<T>, n: usize) -> Result<ToeplitzCovariance<T>> {
    let cov = covariance_unchecked(model, n)?;
    cov.cholesky()?;
    Ok(cov)
}

pub(crate) fn covariance_unchecked<T: Real>(model: &NoiseModel<T>, n: usize) -> Result<ToeplitzCovariance<T>> {
    if n == 0 {
        return Err(Error::DimensionMismatch("covariance of zero samples".into()));
    }
    if model.lags() + 1 < n {
        return Err(Error::InsufficientLags(format!(
            "model tabulates {} lags, {} needed",
            model.lags(),
            n - 1
        )));
    }
    ToeplitzCovariance::from_lags(model.correlation()[..n].to_vec())
}

enum Sampler<T: Real> {
    Zero,
    White { sigma: T },
    Circulant { sqrt_eig: Vec<T>, fft: Arc<dyn Fft<T>> },
    Cholesky { factor: CMatrix<T> },
}

/// Which construction a [`NoiseSynthesizer`] ended up using.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisPath {
    Zero,
    White,
    CirculantEmbedding,
    Cholesky,
}

/// Prepared sampler for zero-mean Gaussian vectors of covariance `Omega`.
///
/// Draw `trial` of seed `seed` comes from its own ChaCha stream, so results
/// do not depend on the order in which trials are evaluated.
pub struct NoiseSynthesizer<T: Real> {
    n: usize,
    complex: bool,
    sampler: Sampler<T>,
}

impl<T: Real> NoiseSynthesizer<T> {
    pub fn new(model: &NoiseModel<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("cannot synthesize zero samples".into()));
        }
        let r0 = model.correlation()[0].re;
        if model.is_white() {
            let sampler = if r0 > T::zero() { Sampler::White { sigma: r0.sqrt() } } else { Sampler::Zero };
            return Ok(Self { n, complex: false, sampler });
        }
        let cov = covariance_unchecked(model, n)?;
        if !(r0 > T::zero()) {
            return Ok(Self { n, complex: false, sampler: Sampler::Zero });
        }
        let tol = T::lit(1e-14) * r0;
        let complex = cov.first_row().iter().any(|z| z.im.abs() > tol);
        if let Some(sampler) = circulant_sampler(&cov) {
            return Ok(Self { n, complex, sampler });
        }
        let (factor, _) = cov
            .cholesky()
            .map_err(|e| Error::EmbeddingFailed(format!("circulant embedding and Cholesky both failed: {e}")))?;
        Ok(Self { n, complex, sampler: Sampler::Cholesky { factor } })
    }

    pub fn path(&self) -> SynthesisPath {
        match self.sampler {
            Sampler::Zero => SynthesisPath::Zero,
            Sampler::White { .. } => SynthesisPath::White,
            Sampler::Circulant { .. } => SynthesisPath::CirculantEmbedding,
            Sampler::Cholesky { .. } => SynthesisPath::Cholesky,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn draw(&self, seed: u64, trial: u64) -> CVector<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut normal = || T::lit(StandardNormal.sample(&mut rng));
        let n = self.n;
        match &self.sampler {
            Sampler::Zero => CVector::zeros(n),
            Sampler::White { sigma } => CVector::from_fn(n, |_, _| creal(normal() * *sigma)),
            Sampler::Circulant { sqrt_eig, fft } => {
                let m = sqrt_eig.len();
                let mut buf: Vec<Complex<T>> =
                    sqrt_eig.iter().map(|&s| Complex::new(normal(), normal()).scale(s)).collect();
                fft.process(&mut buf);
                let scale = if self.complex { T::lit(0.5).sqrt() } else { T::one() };
                let _ = m;
                CVector::from_fn(n, |i, _| {
                    if self.complex {
                        buf[i].scale(scale)
                    } else {
                        creal(buf[i].re)
                    }
                })
            }
            Sampler::Cholesky { factor } => {
                let z = if self.complex {
                    let s = T::lit(0.5).sqrt();
                    CVector::from_fn(n, |_, _| Complex::new(normal(), normal()).scale(s))
                } else {
                    CVector::from_fn(n, |_, _| creal(normal()))
                };
                factor * z
            }
        }
    }
}

/// Minimal circulant embedding of the Toeplitz covariance; `None` when its
/// spectrum is significantly negative.
fn circulant_sampler<T: Real>(cov: &ToeplitzCovariance<T>) -> Option<Sampler<T>> {
    let n = cov.dim();
    let m = if n == 1 { 1 } else { 2 * (n - 1) };
    let r = cov.first_row();
    let mut c: Vec<Complex<T>> = (0..m)
        .map(|j| if j < n { r[j] } else { r[m - j].conj() })
        .collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(m).process(&mut c);
    let peak = c.iter().fold(T::zero(), |a, z| a.max(z.re.abs()));
    let low = c.iter().fold(peak, |a, z| a.min(z.re));
    if low < -T::lit(1e-10) * peak {
        return None;
    }
    let mm = T::lit(m as f64);
    let sqrt_eig = c.iter().map(|z| (z.re.max(T::zero()) / mm).sqrt()).collect();
    Some(Sampler::Circulant { sqrt_eig, fft: planner.plan_fft_inverse(m) })
}

/// One realization of the noise on `n` samples, reproducible from `seed`.
pub fn synthesize_noise<T: Real>(model: &NoiseModel<T>, n: usize, seed: u64) -> Result<SampledSignal<T>> {
    let synth = NoiseSynthesizer::new(model, n)?;
    SampledSignal::new(model.dt(), synth.draw(seed, 0))
}
