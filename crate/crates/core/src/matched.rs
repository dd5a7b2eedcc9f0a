//! One-parameter spectral GLS, the matched filter and sensitivity of the
//! estimator to a misspecified PSD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConditionReport, Estimate, Method, SampledSignal, SolvePath};
use crate::noise::NoiseModel;
use crate::scalar::{cis, creal, two_pi, CMatrix, CVector, Complex, Real};
use crate::spectral::{dtft, grid_frequencies, grid_weight, idtft, Spectrum, ZeroExtendedSequence};

/// Warn above this perturbation size; the expansion is second order.
pub const EPSILON_WARN: f64 = 0.3;

fn check_template<T: Real>(g: &ZeroExtendedSequence<T>) -> Result<()> {
    if g.ncols() != 1 {
        return Err(Error::DimensionMismatch(format!("template has {} columns, expected 1", g.ncols())));
    }
    Ok(())
}

fn check_dt<T: Real>(a: T, b: T, what: &str) -> Result<()> {
    if (a - b).abs() > T::lit(1e-9) * a {
        return Err(Error::GridMismatch(format!(
            "{what}: time step {} differs from {}",
            a.to_f64_lossy(),
            b.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Template, data and PSD sampled on one band grid.
struct Band<T: Real> {
    g: Vec<Complex<T>>,
    s: Vec<T>,
    weight: T,
}

impl<T: Real> Band<T> {
    fn new(g: &ZeroExtendedSequence<T>, model: &NoiseModel<T>, grid: usize) -> Result<Self> {
        check_template(g)?;
        let fg = dtft(g, model.dt(), grid)?;
        let s = model.ensure_positive_on(fg.freqs())?;
        Ok(Self { g: fg.values().column(0).iter().copied().collect(), s, weight: fg.quadrature_weight() })
    }

    /// `int |G|^2 / S df`.
    fn information(&self) -> T {
        self.integrate(|j| self.g[j].norm_sqr() / self.s[j])
    }

    fn integrate(&self, f: impl Fn(usize) -> T) -> T {
        (0..self.s.len()).fold(T::zero(), |acc, j| acc + f(j)) * self.weight
    }
}

fn data_spectrum<T: Real>(m: &SampledSignal<T>, grid: usize) -> Result<Vec<Complex<T>>> {
    let fm = dtft(&ZeroExtendedSequence::from_signal(m), m.dt(), grid)?;
    Ok(fm.values().column(0).iter().copied().collect())
}

fn check_support<T: Real>(g: &ZeroExtendedSequence<T>, m: &SampledSignal<T>) -> Result<()> {
    let first = m.origin_index();
    let last = first + m.len() as i64 - 1;
    if g.start() < first || g.end() > last {
        return Err(Error::DimensionMismatch(format!(
            "template support {}..={} is outside the record {first}..={last}",
            g.start(),
            g.end()
        )));
    }
    Ok(())
}

/// GLS for a single template by band quadrature:
/// `x* = int conj(G) F{m} / S df / int |G|^2 / S df`, `V = 1 / int |G|^2 / S df`.
pub fn spectral_gls_1d<T: Real>(
    g: &ZeroExtendedSequence<T>,
    m: &SampledSignal<T>,
    model: &NoiseModel<T>,
    grid: usize,
) -> Result<Estimate<T>> {
    check_template(g)?;
    check_support(g, m)?;
    check_dt(model.dt(), m.dt(), "data")?;
    let band = Band::new(g, model, grid)?;
    let fm = data_spectrum(m, grid)?;
    let info = band.information();
    let mut num = (0..grid).fold(creal(T::zero()), |acc, j| acc + band.g[j].conj() * fm[j] / creal(band.s[j]));
    num *= band.weight;
    let v = T::one() / info;
    let x = num.scale(v);
    let resid = (0..m.len()).fold(T::zero(), |acc, i| {
        let k = m.origin_index() + i as i64;
        acc + (m.values()[i] - g.get(k, 0) * x).norm_sqr()
    });
    Ok(Estimate {
        x_star: CVector::from_element(1, x),
        covariance: Some(CMatrix::from_element(1, 1, creal(v))),
        method: Method::GlsSpectral,
        condition: ConditionReport {
            condition_number: T::one(),
            solve_path: SolvePath::SpectralQuadrature,
            residual_norm: resid.sqrt(),
            jitter: T::zero(),
        },
    })
}

/// `K = (int |G|^2 / S df)^-1`.
pub fn matched_gain<T: Real>(g: &ZeroExtendedSequence<T>, model: &NoiseModel<T>, grid: usize) -> Result<T> {
    Ok(T::one() / Band::new(g, model, grid)?.information())
}

/// Filter `F{h} = K conj(G) / S exp(-i 2 pi f t0)` sampled on the band grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilter<T: Real> {
    pub spectrum: Spectrum<T>,
    pub gain: T,
    pub t0: T,
    pub template_label: String,
}

/// Builds the filter for template `g`; `gain` defaults to [`matched_gain`].
pub fn build_matched_filter<T: Real>(
    g: &ZeroExtendedSequence<T>,
    model: &NoiseModel<T>,
    grid: usize,
    t0: T,
    gain: Option<T>,
    label: &str,
) -> Result<MatchedFilter<T>> {
    let band = Band::new(g, model, grid)?;
    let k = gain.unwrap_or_else(|| T::one() / band.information());
    let freqs = grid_frequencies(grid, model.dt());
    let values = CMatrix::from_fn(grid, 1, |j, _| {
        (band.g[j].conj() / creal(band.s[j])) * cis(-two_pi::<T>() * freqs[j] * t0) * k
    });
    Ok(MatchedFilter {
        spectrum: Spectrum::new(model.dt(), values),
        gain: k,
        t0,
        template_label: label.to_string(),
    })
}

impl<T: Real> MatchedFilter<T> {
    pub fn grid_len(&self) -> usize {
        self.spectrum.grid_len()
    }

    pub fn dt(&self) -> T {
        self.spectrum.dt()
    }

    /// Filter taps `h_k` for `k_start..=k_end`.
    pub fn impulse_response(&self, k_start: i64, k_end: i64) -> Result<ZeroExtendedSequence<T>> {
        idtft(&self.spectrum, k_start, k_end)
    }
}

/// Filter output at `t0`: `int F{h} F{m} exp(i 2 pi f t0) df`.
pub fn apply_filter<T: Real>(filter: &MatchedFilter<T>, m: &SampledSignal<T>) -> Result<Complex<T>> {
    check_dt(filter.dt(), m.dt(), "filter and data")?;
    let grid = filter.grid_len();
    if m.len() > grid {
        return Err(Error::GridMismatch(format!(
            "filter grid of {grid} points cannot represent {} samples",
            m.len()
        )));
    }
    let fm = data_spectrum(m, grid)?;
    let freqs = filter.spectrum.freqs();
    let h = filter.spectrum.values();
    let mut acc = creal(T::zero());
    for j in 0..grid {
        acc += h[(j, 0)] * fm[j] * cis(two_pi::<T>() * freqs[j] * filter.t0);
    }
    Ok(acc * grid_weight(grid, filter.dt()))
}

/// Misspecification `w(f)` added to the PSD as `S + eps w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Perturbation {
    /// `w = amplitude S`.
    Proportional {
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `w = amplitude S cos(2 pi cycles f dt)`, changing sign across the band.
    Cosine {
        #[serde(default = "unit")]
        amplitude: f64,
        cycles: f64,
    },
    /// Absolute `[frequency_hz, w]` pairs, linearly interpolated and held
    /// constant beyond the table.
    Tabulated { points: Vec<[f64; 2]> },
}

fn unit() -> f64 {
    1.0
}

impl Perturbation {
    pub fn eval<T: Real>(&self, f: T, s: T, dt: T) -> T {
        match self {
            Perturbation::Proportional { amplitude } => s * T::lit(*amplitude),
            Perturbation::Cosine { amplitude, cycles } => {
                s * T::lit(*amplitude) * (two_pi::<T>() * T::lit(*cycles) * f * dt).cos()
            }
            Perturbation::Tabulated { points } => {
                let x = f.to_f64_lossy();
                let n = points.len();
                let v = if n == 0 {
                    0.0
                } else if x <= points[0][0] {
                    points[0][1]
                } else if x >= points[n - 1][0] {
                    points[n - 1][1]
                } else {
                    let hi = points.partition_point(|p| p[0] <= x);
                    let (a, b) = (points[hi - 1], points[hi]);
                    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
                };
                T::lit(v)
            }
        }
    }
}

/// Variances of the single-template estimator built with `S + eps w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchReport {
    pub epsilon: f64,
    /// Variance claimed by the misspecified model, `(int |G|^2 / S~)^-1`.
    pub v_used: f64,
    /// Optimal variance under the true PSD.
    pub v_true: f64,
    /// Actual variance of the misspecified estimator under the true PSD.
    pub v_exact: f64,
    /// `(v_exact - v_true) / v_true`.
    pub measured_rel_excess: f64,
    /// Second-order prediction `eps^2 (V C - V^2 B^2)`.
    pub predicted_rel_excess: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Perturbed PSD on the grid, after checking `|w| <= S`.
fn perturbation_on_grid<T: Real>(band: &Band<T>, w: &Perturbation, dt: T) -> Result<Vec<T>> {
    let freqs = grid_frequencies(band.s.len(), dt);
    let tol = T::one() + T::lit(1e-12);
    freqs
        .iter()
        .zip(&band.s)
        .map(|(&f, &s)| {
            let wv = w.eval(f, s, dt);
            if !wv.is_finite() || wv.abs() > s * tol {
                Err(Error::PerturbationTooLarge(format!(
                    "|w| = {:.3e} exceeds S = {:.3e} at f = {}",
                    wv.abs().to_f64_lossy(),
                    s.to_f64_lossy(),
                    f.to_f64_lossy()
                )))
            } else {
                Ok(wv)
            }
        })
        .collect()
}

/// Exact and second-order variance of the estimator that assumes
/// `S + eps w` while the noise has PSD `S`.
pub fn psd_mismatch_variance<T: Real>(
    g: &ZeroExtendedSequence<T>,
    model: &NoiseModel<T>,
    w: &Perturbation,
    epsilon: T,
    grid: usize,
) -> Result<MismatchReport> {
    let band = Band::new(g, model, grid)?;
    let wv = perturbation_on_grid(&band, w, model.dt())?;
    Ok(mismatch_on_band(&band, &wv, epsilon))
}

fn mismatch_on_band<T: Real>(band: &Band<T>, wv: &[T], epsilon: T) -> MismatchReport {
    let g2 = |j: usize| band.g[j].norm_sqr();
    let s = &band.s;
    let used: Vec<T> = s.iter().zip(wv).map(|(&s, &w)| s + epsilon * w).collect();
    let info_true = band.information();
    let info_used = band.integrate(|j| g2(j) / used[j]);
    let spread = band.integrate(|j| g2(j) * s[j] / (used[j] * used[j]));
    let v_true = T::one() / info_true;
    let v_used = T::one() / info_used;
    let v_exact = if epsilon == T::zero() { v_true } else { spread / (info_used * info_used) };
    let b = band.integrate(|j| g2(j) * wv[j] / (s[j] * s[j]));
    let c = band.integrate(|j| g2(j) * wv[j] * wv[j] / (s[j] * s[j] * s[j]));
    let predicted = epsilon * epsilon * (v_true * c - v_true * v_true * b * b);
    let eps = epsilon.to_f64_lossy();
    MismatchReport {
        epsilon: eps,
        v_used: v_used.to_f64_lossy(),
        v_true: v_true.to_f64_lossy(),
        v_exact: v_exact.to_f64_lossy(),
        measured_rel_excess: ((v_exact - v_true) / v_true).to_f64_lossy(),
        predicted_rel_excess: predicted.to_f64_lossy(),
        warning: (eps.abs() > EPSILON_WARN)
            .then(|| format!("epsilon = {eps} is beyond the small-perturbation regime")),
    }
}

/// Sweep of [`psd_mismatch_variance`] over several `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchScan {
    pub rows: Vec<MismatchReport>,
    /// Least-squares slope of `ln(measured excess)` against `ln(eps)`;
    /// absent with fewer than two usable rows.
    pub slope: Option<f64>,
}

pub fn mismatch_scan<T: Real>(
    g: &ZeroExtendedSequence<T>,
    model: &NoiseModel<T>,
    w: &Perturbation,
    epsilons: &[T],
    grid: usize,
) -> Result<MismatchScan> {
    let band = Band::new(g, model, grid)?;
    let wv = perturbation_on_grid(&band, w, model.dt())?;
    let rows: Vec<MismatchReport> = epsilons.iter().map(|&e| mismatch_on_band(&band, &wv, e)).collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.epsilon.abs(), r.measured_rel_excess))
        .collect();
    Ok(MismatchScan { slope: log_log_slope(&pts), rows })
}

/// Slope of the least-squares line through `(ln x, ln y)`; `None` unless at
/// least two distinct positive points exist and all `y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Single-template estimate computed with the misspecified PSD `S + eps w`;
/// the covariance is the exact variance under the true `S`.
pub fn misspecified_gls_1d<T: Real>(
    g: &ZeroExtendedSequence<T>,
    m: &SampledSignal<T>,
    model: &NoiseModel<T>,
    w: &Perturbation,
    epsilon: T,
    grid: usize,
) -> Result<Estimate<T>> {
    check_support(g, m)?;
    check_dt(model.dt(), m.dt(), "data")?;
    let band = Band::new(g, model, grid)?;
    let wv = perturbation_on_grid(&band, w, model.dt())?;
    let fm = data_spectrum(m, grid)?;
    let used: Vec<T> = band.s.iter().zip(&wv).map(|(&s, &w)| s + epsilon * w).collect();
    let info_used = band.integrate(|j| band.g[j].norm_sqr() / used[j]);
    let mut num = creal(T::zero());
    for j in 0..grid {
        num += band.g[j].conj() * fm[j] / creal(used[j]);
    }
    let x = num.scale(band.weight / info_used);
    let report = mismatch_on_band(&band, &wv, epsilon);
    Ok(Estimate {
        x_star: CVector::from_element(1, x),
        covariance: Some(CMatrix::from_element(1, 1, creal(T::lit(report.v_exact)))),
        method: Method::MatchedFilter,
        condition: ConditionReport {
            condition_number: T::one(),
            solve_path: SolvePath::SpectralQuadrature,
            residual_norm: T::zero(),
            jitter: T::zero(),
        },
    })
}

/// The single-template estimator as a row vector `a` with `x* = a m`.
pub(crate) fn spectral_gls_1d_operator<T: Real>(
    g: &ZeroExtendedSequence<T>,
    model: &NoiseModel<T>,
    n: usize,
    origin: i64,
    grid: usize,
) -> Result<CMatrix<T>> {
    let band = Band::new(g, model, grid)?;
    if grid < n {
        return Err(Error::GridTooCoarse(format!("grid of {grid} points for {n} samples")));
    }
    let v = T::one() / band.information();
    let freqs = grid_frequencies(grid, model.dt());
    let dt = model.dt();
    // x* = V w dt sum_j conj(G_j)/S_j sum_k m_k exp(-i 2 pi k f_j dt)
    let coef: Vec<Complex<T>> =
        (0..grid).map(|j| band.g[j].conj() / creal(band.s[j]) * (v * band.weight * dt)).collect();
    Ok(CMatrix::from_fn(1, n, |_, i| {
        let k = T::lit((origin + i as i64) as f64);
        coef.iter()
            .zip(&freqs)
            .fold(creal(T::zero()), |acc, (c, &f)| acc + *c * cis(-two_pi::<T>() * k * f * dt))
    }))
}
