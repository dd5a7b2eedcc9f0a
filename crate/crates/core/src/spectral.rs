//! Discrete-time Fourier analysis of zero-extended sequences.
//!
//! Conventions, for a sequence `G_kl` and time step `dt`:
//!
//! * forward transform `F{G}_l(f) = dt * sum_k G_kl exp(-i 2 pi k f dt)`;
//! * inverse transform `F^-1{h}_kl = int h_l(f) exp(+i 2 pi k f dt) df`;
//! * every band integral runs over `[-1/(2 dt), 1/(2 dt)]`.
//!
//! Spectra are tabulated on the uniform grid `f_j = (j/M - 1/2) / dt`,
//! `j = 0..M`. Band integrals use the trapezoid rule on that grid; since all
//! integrands are periodic in `f` with period `1/dt`, this is the rectangle
//! sum `1/(M dt) * sum_j`, exact for trigonometric polynomials of degree
//! below `M`.

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{DesignMatrix, SampledSignal};
use crate::scalar::{cabs, cis, creal, two_pi, CMatrix, Complex, Real};

/// Relative floor below which a kernel spectrum counts as vanishing.
pub const SPECTRAL_FLOOR_REL: f64 = 1e-10;

/// A block of values at indices `start..=end`, implicitly zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroExtendedSequence<T: Real> {
    start: i64,
    entries: CMatrix<T>,
}

impl<T: Real> ZeroExtendedSequence<T> {
    pub fn new(start: i64, entries: CMatrix<T>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("sequence block must be non-empty".into()));
        }
        Ok(Self { start, entries })
    }

    pub fn from_column(start: i64, values: &[Complex<T>]) -> Result<Self> {
        Self::new(start, CMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn from_real(start: i64, values: &[T]) -> Result<Self> {
        let v: Vec<_> = values.iter().map(|&x| creal(x)).collect();
        Self::from_column(start, &v)
    }

    /// Unit impulse at index `k`, one column.
    pub fn impulse(k: i64) -> Self {
        Self { start: k, entries: CMatrix::from_element(1, 1, creal(T::one())) }
    }

    /// `J` extended by zeros outside its sampling indices.
    pub fn from_design(j: &DesignMatrix<T>) -> Self {
        Self { start: j.origin_index(), entries: j.entries().clone() }
    }

    /// `m` extended by zeros outside its sampling indices.
    pub fn from_signal(m: &SampledSignal<T>) -> Self {
        Self {
            start: m.origin_index(),
            entries: CMatrix::from_column_slice(m.len(), 1, m.values().as_slice()),
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last stored index (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.entries.nrows() as i64 - 1
    }

    pub fn support_len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<T> {
        self.entries
    }

    /// Value at index `k`, column `l`; zero outside the stored block.
    pub fn get(&self, k: i64, l: usize) -> Complex<T> {
        if k < self.start || k > self.end() {
            Complex::new(T::zero(), T::zero())
        } else {
            self.entries[((k - self.start) as usize, l)]
        }
    }

    /// The same sequence stored on `start..=end` (cropping or zero padding).
    pub fn window(&self, start: i64, end: i64) -> Result<Self> {
        if end < start {
            return Err(Error::DimensionMismatch(format!("empty window {start}..={end}")));
        }
        let rows = (end - start + 1) as usize;
        let entries = CMatrix::from_fn(rows, self.ncols(), |r, l| self.get(start + r as i64, l));
        Ok(Self { start, entries })
    }

    /// Concatenates columns of sequences sharing the same support.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.start != other.start || self.support_len() != other.support_len() {
            return Err(Error::DimensionMismatch("column stacking needs identical supports".into()));
        }
        let p = self.ncols();
        let entries = CMatrix::from_fn(self.support_len(), p + other.ncols(), |r, c| {
            if c < p {
                self.entries[(r, c)]
            } else {
                other.entries[(r, c - p)]
            }
        });
        Ok(Self { start: self.start, entries })
    }

    pub fn column(&self, l: usize) -> Self {
        Self { start: self.start, entries: self.entries.columns(l, 1).into_owned() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let lo = self.start.min(other.start);
        let hi = self.end().max(other.end());
        let mut worst = T::zero();
        for k in lo..=hi {
            for l in 0..self.ncols().max(other.ncols()) {
                let a = if l < self.ncols() { self.get(k, l) } else { creal(T::zero()) };
                let b = if l < other.ncols() { other.get(k, l) } else { creal(T::zero()) };
                worst = worst.max(cabs(a - b));
            }
        }
        worst
    }
}

/// DTFT values on the uniform band grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    dt: T,
    freqs: Vec<T>,
    /// `M x p`; row `j` holds the transform at `freqs[j]`.
    values: CMatrix<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(dt: T, values: CMatrix<T>) -> Self {
        let freqs = grid_frequencies(values.nrows(), dt);
        Self { dt, freqs, values }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn values(&self) -> &CMatrix<T> {
        &self.values
    }

    pub fn grid_len(&self) -> usize {
        self.freqs.len()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Trapezoid weight `1 / (M dt)` of every grid point.
    pub fn quadrature_weight(&self) -> T {
        grid_weight(self.grid_len(), self.dt)
    }

    /// Band integral of column `l`.
    pub fn integrate(&self, l: usize) -> Complex<T> {
        let w = self.quadrature_weight();
        self.values.column(l).iter().fold(creal(T::zero()), |acc, z| acc + *z) * w
    }
}

/// `f_j = (j/M - 1/2) / dt` for `j = 0..M`.
pub fn grid_frequencies<T: Real>(m: usize, dt: T) -> Vec<T> {
    let mm = T::lit(m as f64);
    let half = T::lit(0.5);
    (0..m).map(|j| (T::lit(j as f64) / mm - half) / dt).collect()
}

pub(crate) fn grid_weight<T: Real>(m: usize, dt: T) -> T {
    T::one() / (T::lit(m as f64) * dt)
}

/// `(-1)^k`.
fn alternating<T: Real>(k: i64) -> T {
    if k.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `exp(-i 2 pi s j / M)` with the product reduced modulo `M` first.
fn grid_phase<T: Real>(s: i64, j: usize, m: usize, sign: T) -> Complex<T> {
    let r = ((s as i128 * j as i128).rem_euclid(m as i128)) as f64;
    cis(sign * two_pi::<T>() * T::lit(r) / T::lit(m as f64))
}

/// DTFT of `g` on an `m`-point band grid, evaluated exactly through a
/// zero-padded FFT.
pub fn dtft<T: Real>(g: &ZeroExtendedSequence<T>, dt: T, m: usize) -> Result<Spectrum<T>> {
    let len = g.support_len();
    if m < len {
        return Err(Error::GridTooCoarse(format!(
            "grid of {m} points for a support of {len} samples"
        )));
    }
    let fft = FftPlanner::<T>::new().plan_fft_forward(m);
    let s = g.start();
    let lead = alternating::<T>(s) * dt;
    let mut values = CMatrix::<T>::zeros(m, g.ncols());
    let mut buf = vec![creal(T::zero()); m];
    for l in 0..g.ncols() {
        buf.iter_mut().for_each(|z| *z = creal(T::zero()));
        for (n, z) in buf.iter_mut().take(len).enumerate() {
            *z = g.entries[(n, l)] * alternating::<T>(n as i64);
        }
        fft.process(&mut buf);
        for (j, z) in buf.iter().enumerate() {
            values[(j, l)] = *z * grid_phase(s, j, m, -T::one()) * lead;
        }
    }
    Ok(Spectrum::new(dt, values))
}

/// Reference DTFT by direct summation at arbitrary frequencies.
pub fn dtft_direct<T: Real>(g: &ZeroExtendedSequence<T>, dt: T, freqs: &[T]) -> CMatrix<T> {
    CMatrix::from_fn(freqs.len(), g.ncols(), |j, l| {
        let mut acc = creal(T::zero());
        for n in 0..g.support_len() {
            let k = T::lit((g.start() + n as i64) as f64);
            acc += g.entries[(n, l)] * cis(-two_pi::<T>() * k * freqs[j] * dt);
        }
        acc * dt
    })
}

/// Inverse DTFT on the index range `k_start..=k_end`, by trapezoid quadrature
/// over the band grid of `h`.
///
/// Indices further apart than the grid length alias onto each other.
pub fn idtft<T: Real>(h: &Spectrum<T>, k_start: i64, k_end: i64) -> Result<ZeroExtendedSequence<T>> {
    if k_end < k_start {
        return Err(Error::DimensionMismatch(format!("empty index range {k_start}..={k_end}")));
    }
    let m = h.grid_len();
    let fft = FftPlanner::<T>::new().plan_fft_inverse(m);
    let w = h.quadrature_weight();
    let rows = (k_end - k_start + 1) as usize;
    let mut entries = CMatrix::<T>::zeros(rows, h.ncols());
    let mut buf = vec![creal(T::zero()); m];
    for l in 0..h.ncols() {
        buf.copy_from_slice(h.values.column(l).as_slice());
        fft.process(&mut buf);
        for r in 0..rows {
            let k = k_start + r as i64;
            let idx = k.rem_euclid(m as i64) as usize;
            entries[(r, l)] = buf[idx] * (alternating::<T>(k) * w);
        }
    }
    ZeroExtendedSequence::new(k_start, entries)
}

/// `<A|B>_kl = sum_j conj(A_jk) B_jl`, a `p_A x p_B` matrix.
pub fn matrix_scalar_product<T: Real>(a: &ZeroExtendedSequence<T>, b: &ZeroExtendedSequence<T>) -> CMatrix<T> {
    let mut out = CMatrix::<T>::zeros(a.ncols(), b.ncols());
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    if lo > hi {
        return out;
    }
    let rows = (hi - lo + 1) as usize;
    let ab = a.entries.rows((lo - a.start()) as usize, rows);
    let bb = b.entries.rows((lo - b.start()) as usize, rows);
    ab.ad_mul_to(&bb, &mut out);
    out
}

/// `(1/dt) int conj(F{A}_k) F{B}_l df`: the frequency-domain side of the
/// Parseval identity.
pub fn parseval_product<T: Real>(
    a: &ZeroExtendedSequence<T>,
    b: &ZeroExtendedSequence<T>,
    dt: T,
    m: usize,
) -> Result<CMatrix<T>> {
    let hull = (a.end().max(b.end()) - a.start().min(b.start()) + 1) as usize;
    if m < hull {
        return Err(Error::GridTooCoarse(format!(
            "grid of {m} points for sequences spanning {hull} indices"
        )));
    }
    let fa = dtft(a, dt, m)?;
    let fb = dtft(b, dt, m)?;
    let w = fa.quadrature_weight() / dt;
    Ok(fa.values.ad_mul(&fb.values).map(|z| z * w))
}

/// Generalized convolution `(Q * X)_kl = sum_i Q_{k-i} X_il`.
pub fn gen_convolve<T: Real>(q: &ZeroExtendedSequence<T>, x: &ZeroExtendedSequence<T>) -> Result<ZeroExtendedSequence<T>> {
    if q.ncols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "convolution kernel must have one column, got {}",
            q.ncols()
        )));
    }
    let lq = q.support_len();
    let lx = x.support_len();
    let mut out = CMatrix::<T>::zeros(lq + lx - 1, x.ncols());
    for l in 0..x.ncols() {
        for b in 0..lx {
            let xv = x.entries[(b, l)];
            if xv.re == T::zero() && xv.im == T::zero() {
                continue;
            }
            for a in 0..lq {
                out[(a + b, l)] += q.entries[(a, 0)] * xv;
            }
        }
    }
    ZeroExtendedSequence::new(q.start() + x.start(), out)
}

/// Lags `-max_lag..=max_lag` of the kernel of `L_Q^-1`, whose spectrum is
/// `dt^2 / F{Q}` (the time step cancels in index space).
///
/// The band grid is the next power of two above `8 * (2 max_lag + 1)` and
/// `8 * support(Q)`.
pub fn inverse_kernel<T: Real>(q: &ZeroExtendedSequence<T>, max_lag: usize) -> Result<ZeroExtendedSequence<T>> {
    inverse_kernel_checked(q, max_lag, false)
}

/// As [`inverse_kernel`]; with `positive` the kernel spectrum must also have
/// a real part above the floor, as a covariance sequence does.
pub(crate) fn inverse_kernel_checked<T: Real>(
    q: &ZeroExtendedSequence<T>,
    max_lag: usize,
    positive: bool,
) -> Result<ZeroExtendedSequence<T>> {
    if q.ncols() != 1 {
        return Err(Error::DimensionMismatch("kernel must have one column".into()));
    }
    let m = (8 * (2 * max_lag + 1)).max(8 * q.support_len()).next_power_of_two();
    let fq = dtft(q, T::one(), m)?;
    let peak = fq.values.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)));
    let floor = T::lit(SPECTRAL_FLOOR_REL) * peak;
    let low = fq.values.iter().fold(T::max_value().unwrap_or(peak), |acc, z| {
        acc.min(if positive { z.re } else { cabs(*z) })
    });
    if !(peak > T::zero()) || low < floor {
        return Err(Error::SpectralZero(format!(
            "kernel spectrum min {:.3e} is below {:.0e} of its max {:.3e}",
            low.to_f64_lossy(),
            SPECTRAL_FLOOR_REL,
            peak.to_f64_lossy()
        )));
    }
    let inv = fq.values.map(|z| creal(T::one()) / z);
    let lag = max_lag as i64;
    idtft(&Spectrum::new(T::one(), inv), -lag, lag)
}

/// `L_Q^-1(Y)` restricted to the support of `Y` widened by `pad` on each side.
pub fn gen_deconvolve<T: Real>(
    q: &ZeroExtendedSequence<T>,
    y: &ZeroExtendedSequence<T>,
    pad: usize,
) -> Result<ZeroExtendedSequence<T>> {
    deconvolve_checked(q, y, pad, false)
}

pub(crate) fn deconvolve_checked<T: Real>(
    q: &ZeroExtendedSequence<T>,
    y: &ZeroExtendedSequence<T>,
    pad: usize,
    positive: bool,
) -> Result<ZeroExtendedSequence<T>> {
    let max_lag = y.support_len() - 1 + pad;
    let kernel = inverse_kernel_checked(q, max_lag, positive)?;
    // every lag needed on the output window is inside the kernel block
    let full = gen_convolve(&kernel, y)?;
    full.window(y.start() - pad as i64, y.end() + pad as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(start: i64, rows: usize, cols: usize, seed: u64) -> ZeroExtendedSequence<f64> {
        // small deterministic pseudo-random block
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let e = CMatrix::from_fn(rows, cols, |_, _| Complex::new(next(), next()));
        ZeroExtendedSequence::new(start, e).unwrap()
    }

    #[test]
    fn impulse_at_zero_has_flat_spectrum() {
        let dt = 0.25;
        let s = dtft(&ZeroExtendedSequence::<f64>::impulse(0), dt, 16).unwrap();
        for z in s.values().iter() {
            assert!((z.re - dt).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn impulse_at_one_is_a_phase_ramp() {
        let dt = 0.5;
        let s = dtft(&ZeroExtendedSequence::<f64>::impulse(1), dt, 12).unwrap();
        for (j, f) in s.freqs().iter().enumerate() {
            let e = cis(-2.0 * std::f64::consts::PI * f * dt) * dt;
            assert!(cabs(s.values()[(j, 0)] - e) < 1e-15);
        }
    }

    #[test]
    fn ones_sum_at_zero_frequency() {
        let g = ZeroExtendedSequence::<f64>::from_real(1, &[1.0; 4]).unwrap();
        let s = dtft(&g, 1.0, 8).unwrap();
        // f_4 = 0 on an 8-point grid
        assert_eq!(s.freqs()[4], 0.0);
        assert!(cabs(s.values()[(4, 0)] - Complex::new(4.0, 0.0)) < 1e-14);
    }

    #[test]
    fn fast_dtft_matches_direct_sum() {
        for (start, m) in [(-7i64, 40usize), (3, 33), (0, 19), (250, 64)] {
            let g = seq(start, 19, 2, (start + 20) as u64);
            let fast = dtft(&g, 0.1, m).unwrap();
            let slow = dtft_direct(&g, 0.1, fast.freqs());
            let scale = slow.iter().fold(0.0f64, |a, z| a.max(cabs(*z)));
            let err = (fast.values() - &slow).iter().fold(0.0f64, |a, z| a.max(cabs(*z)));
            assert!(err <= 1e-12 * scale, "start {start}: {err}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = seq(0, 10, 1, 3);
        assert_eq!(dtft(&g, 1.0, 9).unwrap_err().name(), "GridTooCoarse");
        assert_eq!(parseval_product(&g, &g.window(5, 20).unwrap(), 1.0, 15).unwrap_err().name(), "GridTooCoarse");
    }

    #[test]
    fn inverse_of_flat_spectrum_is_impulse() {
        let dt = 0.3;
        let h = Spectrum::new(dt, CMatrix::from_element(24, 1, Complex::new(dt, 0.0)));
        let g = idtft(&h, -3, 3).unwrap();
        assert!(g.max_abs_diff(&ZeroExtendedSequence::impulse(0)) < 1e-15);
    }

    #[test]
    fn inverse_of_phase_ramp_is_shifted_impulse() {
        let dt = 2.0;
        let m = 16;
        let freqs = grid_frequencies::<f64>(m, dt);
        let vals = CMatrix::from_fn(m, 1, |j, _| cis(-2.0 * std::f64::consts::PI * freqs[j] * dt) * dt);
        let g = idtft(&Spectrum::new(dt, vals), -2, 4).unwrap();
        assert!(g.max_abs_diff(&ZeroExtendedSequence::impulse(1)) < 1e-14);
    }

    #[test]
    fn dtft_roundtrip() {
        let g = seq(-5, 30, 2, 9);
        let s = dtft(&g, 0.7, 8 * 30).unwrap();
        let back = idtft(&s, g.start(), g.end()).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-10);
        // outside the support the inverse is zero as well
        let wide = idtft(&s, g.start() - 10, g.end() + 10).unwrap();
        assert!(wide.max_abs_diff(&g) < 1e-10);
    }

    #[test]
    fn scalar_product_examples() {
        let d = ZeroExtendedSequence::<f64>::impulse(0);
        assert_eq!(matrix_scalar_product(&d, &d)[(0, 0)], Complex::new(1.0, 0.0));
        let a = seq(0, 4, 2, 1);
        let b = seq(10, 3, 3, 2);
        assert_eq!(matrix_scalar_product(&a, &b), CMatrix::zeros(2, 3));
        let a = seq(2, 3, 2, 5);
        let b = seq(2, 3, 2, 6);
        let dense = a.entries().adjoint() * b.entries();
        assert!((matrix_scalar_product(&a, &b) - dense).iter().all(|z| cabs(*z) < 1e-15));
    }

    #[test]
    fn parseval_matches_time_domain() {
        let ones = ZeroExtendedSequence::<f64>::from_real(1, &[1.0; 6]).unwrap();
        let p = parseval_product(&ones, &ones, 0.5, 48).unwrap();
        assert!(cabs(p[(0, 0)] - Complex::new(6.0, 0.0)) < 1e-13);
        let d = ZeroExtendedSequence::<f64>::impulse(0);
        assert!(cabs(parseval_product(&d, &d, 3.0, 8).unwrap()[(0, 0)] - Complex::new(1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn convolution_identities() {
        let x = seq(-2, 7, 2, 4);
        let id = gen_convolve(&ZeroExtendedSequence::impulse(0), &x).unwrap();
        assert!(id.max_abs_diff(&x) < 1e-16);
        let shifted = gen_convolve(&ZeroExtendedSequence::impulse(1), &x).unwrap();
        assert_eq!(shifted.start(), x.start() + 1);
        assert!(shifted.window(x.start() + 1, x.end() + 1).unwrap().entries() == x.entries());
    }

    #[test]
    fn convolution_matches_double_sum_and_spectrum() {
        let q = seq(-3, 5, 1, 21);
        let x = seq(4, 9, 2, 22);
        let y = gen_convolve(&q, &x).unwrap();
        for k in (y.start() - 2)..=(y.end() + 2) {
            for l in 0..2 {
                let mut acc = Complex::new(0.0, 0.0);
                for i in -20..40 {
                    acc += q.get(k - i, 0) * x.get(i, l);
                }
                assert!(cabs(acc - y.get(k, l)) < 1e-14);
            }
        }
        let dt = 0.4;
        let m = 64;
        let fq = dtft(&q, dt, m).unwrap();
        let fx = dtft(&x, dt, m).unwrap();
        let fy = dtft(&y, dt, m).unwrap();
        for j in 0..m {
            for l in 0..2 {
                let e = fq.values()[(j, 0)] * fx.values()[(j, l)] / dt;
                assert!(cabs(fy.values()[(j, l)] - e) <= 1e-9 * cabs(e).max(1e-3));
            }
        }
    }

    #[test]
    fn deconvolution_by_identity_and_scalar_kernels() {
        let y = seq(0, 6, 1, 30);
        let out = gen_deconvolve(&ZeroExtendedSequence::impulse(0), &y, 3).unwrap();
        assert_eq!(out.start(), -3);
        assert!(out.max_abs_diff(&y) < 1e-14);
        let sigma2 = 2.5;
        let q = ZeroExtendedSequence::from_real(0, &[sigma2]).unwrap();
        let out = gen_deconvolve(&q, &y, 2).unwrap();
        let scaled = ZeroExtendedSequence::new(y.start(), y.entries().map(|z| z / sigma2)).unwrap();
        assert!(out.max_abs_diff(&scaled) < 1e-14);
    }

    #[test]
    fn deconvolution_rejects_spectral_nulls() {
        // 1 + z^-1 vanishes at the Nyquist frequency
        let q = ZeroExtendedSequence::<f64>::from_real(0, &[1.0, 1.0]).unwrap();
        let y = seq(0, 4, 1, 1);
        assert_eq!(gen_deconvolve(&q, &y, 4).unwrap_err().name(), "SpectralZero");
    }
}
