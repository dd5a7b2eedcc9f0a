//! OLS and GLS estimators, the P-orthonormalized design, transitivity of
//! chained reductions and Loewner-order comparison.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    ls_covariance, ls_estimate, ConditionReport, DesignMatrix, Estimate, Method, SampledSignal, SolvePath,
    WeightMatrix,
};
use crate::noise::{NoiseModel, Psd, ToeplitzCovariance};
use crate::scalar::{cabs, creal, max_abs, CMatrix, CVector, Complex, Real};
use crate::spectral::{
    deconvolve_checked, dtft, gen_convolve, grid_frequencies, idtft, matrix_scalar_product, Spectrum,
    ZeroExtendedSequence,
};

/// Design with P-orthonormal columns: `J~ = J C`, `J~' P J~ = I`.
///
/// Produced by modified Gram-Schmidt, so `C = R^-1` is upper triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalizedDesign<T: Real> {
    j_tilde: CMatrix<T>,
    p_j_tilde: CMatrix<T>,
    r: CMatrix<T>,
    c: CMatrix<T>,
    condition: T,
}

impl<T: Real> OrthonormalizedDesign<T> {
    pub fn j_tilde(&self) -> &CMatrix<T> {
        &self.j_tilde
    }

    /// `P J~`.
    pub fn p_j_tilde(&self) -> &CMatrix<T> {
        &self.p_j_tilde
    }

    /// Change of basis `C` with `J~ = J C`.
    pub fn c(&self) -> &CMatrix<T> {
        &self.c
    }

    /// Triangular factor `R = C^-1`, `J = J~ R`.
    pub fn r(&self) -> &CMatrix<T> {
        &self.r
    }

    /// Condition number of `J'PJ`, i.e. `cond(R)^2`.
    pub fn condition(&self) -> T {
        self.condition
    }

    /// `x* = C J~' P m`, applied through a triangular solve with `R`.
    pub fn solve(&self, m: &CVector<T>) -> CVector<T> {
        let y = self.p_j_tilde.ad_mul(m);
        self.r.solve_upper_triangular(&y).unwrap_or_else(|| &self.c * y)
    }

    /// The estimator as a `p x N` matrix, `C (P J~)'`.
    pub fn operator(&self) -> CMatrix<T> {
        &self.c * self.p_j_tilde.adjoint()
    }

    /// `(J'PJ)^-1 = C C'`.
    pub fn gram_inverse(&self) -> CMatrix<T> {
        linalg::symmetrize(&(&self.c * self.c.adjoint()))
    }

    /// `max |J~'PJ~ - I|`.
    pub fn orthonormality_defect(&self) -> T {
        let p = self.j_tilde.ncols();
        let g = self.j_tilde.ad_mul(&self.p_j_tilde);
        max_abs(&(g - CMatrix::<T>::identity(p, p)))
    }
}

/// Modified Gram-Schmidt of the columns of `J` under `<.|.>_P`.
pub fn orthonormalize<T: Real>(j: &DesignMatrix<T>, p: &WeightMatrix<T>) -> Result<OrthonormalizedDesign<T>> {
    orthonormalize_columns(j.entries(), p)
}

/// [`orthonormalize`] on a bare matrix.
///
/// Every column is orthogonalized twice against its predecessors, which keeps
/// `J~'PJ~` at rounding level even for badly conditioned designs.
pub fn orthonormalize_columns<T: Real>(j: &CMatrix<T>, p: &WeightMatrix<T>) -> Result<OrthonormalizedDesign<T>> {
    let (n, cols) = j.shape();
    if p.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "weight is {0}x{0}, design has {1} rows",
            p.dim(),
            n
        )));
    }
    if cols == 0 || cols > n {
        return Err(Error::RankDeficient(format!("{cols} columns for {n} samples")));
    }
    let mut q = CMatrix::<T>::zeros(n, cols);
    let mut pq = CMatrix::<T>::zeros(n, cols);
    let mut r = CMatrix::<T>::zeros(cols, cols);
    let cutoff_rel = T::lit(n as f64) * T::eps();
    let mut largest = T::zero();
    for l in 0..cols {
        let mut v: CVector<T> = j.column(l).into_owned();
        let initial = p_norm(&v, &p.apply_vec(&v));
        for _pass in 0..2 {
            for i in 0..l {
                let coef = pq.column(i).dotc(&v);
                v.axpy(-coef, &q.column(i), creal(T::one()));
                r[(i, l)] += coef;
            }
        }
        let pv = p.apply_vec(&v);
        let pivot = p_norm(&v, &pv);
        let scale = largest.max(initial);
        if !(pivot > cutoff_rel * scale) || !pivot.is_finite() {
            return Err(Error::RankDeficient(format!(
                "Gram-Schmidt pivot {:.3e} of column {l} is below {:.3e}",
                pivot.to_f64_lossy(),
                (cutoff_rel * scale).to_f64_lossy()
            )));
        }
        largest = largest.max(pivot);
        r[(l, l)] = creal(pivot);
        let inv = T::one() / pivot;
        q.set_column(l, &v.map(|z| z.scale(inv)));
        pq.set_column(l, &pv.map(|z| z.scale(inv)));
    }
    let c = linalg::upper_triangular_inverse(&r)
        .ok_or_else(|| Error::RankDeficient("triangular factor is singular".into()))?;
    let sv = linalg::singular_values(&r);
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => (hi / lo) * (hi / lo),
        _ => T::max_value().unwrap_or_else(T::one),
    };
    Ok(OrthonormalizedDesign { j_tilde: q, p_j_tilde: pq, r, c, condition })
}

fn p_norm<T: Real>(v: &CVector<T>, pv: &CVector<T>) -> T {
    v.dotc(pv).re.max(T::zero()).sqrt()
}

/// Ordinary least squares, `P = I`.
pub fn ols<T: Real>(j: &DesignMatrix<T>, m: &SampledSignal<T>) -> Result<Estimate<T>> {
    ls_estimate(&WeightMatrix::identity(j.n_samples()), j, m)
}

/// `(J'J)^-1 J' Omega J (J'J)^-1`.
pub fn ols_covariance_time<T: Real>(j: &DesignMatrix<T>, omega: &CMatrix<T>) -> Result<CMatrix<T>> {
    ls_covariance(&WeightMatrix::identity(j.n_samples()), j, omega)
}

/// OLS covariance from the PSD: `(J'J)^-1 W (J'J)^-1` with
/// `W = (1/dt^2) int S conj(F{J}) F{J} df`.
///
/// The band integral runs on the `grid`-point band grid with the product
/// weights of [`NoiseModel::grid_weights`].
pub fn ols_covariance_freq<T: Real>(j: &DesignMatrix<T>, model: &NoiseModel<T>, grid: usize) -> Result<CMatrix<T>> {
    check_model_grid(j.dt(), model)?;
    let od = orthonormalize_columns(j.entries(), &WeightMatrix::identity(j.n_samples()))?;
    let fj = dtft(&ZeroExtendedSequence::from_design(j), j.dt(), grid)?;
    let weights = model.grid_weights(grid);
    let inv_dt2 = T::one() / (j.dt() * j.dt());
    let weighted = CMatrix::from_fn(grid, j.n_params(), |r, c| fj.values()[(r, c)].scale(weights[r] * inv_dt2));
    let w = linalg::symmetrize(&fj.values().ad_mul(&weighted));
    let g = od.gram_inverse();
    Ok(linalg::symmetrize(&(&g * w * &g)))
}

fn check_model_grid<T: Real>(dt: T, model: &NoiseModel<T>) -> Result<()> {
    if (dt - model.dt()).abs() > T::lit(1e-9) * dt {
        return Err(Error::DimensionMismatch(format!(
            "noise model time step {} differs from design time step {}",
            model.dt().to_f64_lossy(),
            dt.to_f64_lossy()
        )));
    }
    Ok(())
}

fn check_signal<T: Real>(j: &DesignMatrix<T>, m: &SampledSignal<T>) -> Result<()> {
    if m.len() != j.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} rows, data has {} samples",
            j.n_samples(),
            m.len()
        )));
    }
    if (m.dt() - j.dt()).abs() > T::lit(1e-9) * j.dt() {
        return Err(Error::DimensionMismatch(format!(
            "design time step {} differs from signal time step {}",
            j.dt().to_f64_lossy(),
            m.dt().to_f64_lossy()
        )));
    }
    Ok(())
}

/// Generalized least squares in the time domain.
///
/// `Omega = L L'` is factored once; the whitened design `L^-1 J` is
/// orthonormalized and the covariance is `(J' Omega^-1 J)^-1 = C C'`.
pub fn gls_time<T: Real>(j: &DesignMatrix<T>, m: &SampledSignal<T>, omega: &ToeplitzCovariance<T>) -> Result<Estimate<T>> {
    check_signal(j, m)?;
    let w = Whitened::new(j, omega)?;
    let mw = w.whiten_vec(m.values());
    let x_star = w.od.solve(&mw);
    let resid = mw - w.od.j_tilde() * w.od.r() * &x_star;
    Ok(Estimate {
        x_star,
        covariance: Some(w.od.gram_inverse()),
        method: Method::GlsTime,
        condition: ConditionReport {
            condition_number: w.od.condition(),
            solve_path: SolvePath::WhitenedGramSchmidt,
            residual_norm: resid.norm(),
            jitter: w.jitter,
        },
    })
}

/// Cholesky-whitened design shared by the GLS routines.
pub(crate) struct Whitened<T: Real> {
    l: CMatrix<T>,
    pub od: OrthonormalizedDesign<T>,
    pub jitter: T,
}

impl<T: Real> Whitened<T> {
    pub fn new(j: &DesignMatrix<T>, omega: &ToeplitzCovariance<T>) -> Result<Self> {
        if omega.dim() != j.n_samples() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {0}x{0}, design has {1} rows",
                omega.dim(),
                j.n_samples()
            )));
        }
        let (l, jitter) = omega.cholesky()?;
        let jw = l
            .solve_lower_triangular(j.entries())
            .ok_or_else(|| Error::NotPsd("covariance factor is singular".into()))?;
        let od = orthonormalize_columns(&jw, &WeightMatrix::identity(j.n_samples()))?;
        Ok(Self { l, od, jitter })
    }

    pub fn whiten_vec(&self, v: &CVector<T>) -> CVector<T> {
        self.l.solve_lower_triangular(v).unwrap_or_else(|| v.clone())
    }

    /// `(J' Omega^-1 J)^-1 J' Omega^-1` as a `p x N` matrix.
    pub fn operator(&self) -> CMatrix<T> {
        let y = self
            .l
            .adjoint()
            .solve_upper_triangular(self.od.j_tilde())
            .unwrap_or_else(|| self.od.j_tilde().clone());
        self.od.c() * y.adjoint()
    }
}

/// Oversampling of the band grid that samples `dt^2 / S` for the inverse
/// kernel of a continuous PSD.
const KERNEL_OVERSAMPLING: usize = 64;

/// `L_Q^-1(Y)` with `Q_k = R(k dt)` over all lags, on the support of `Y`
/// widened by `pad`.
///
/// A finite correlation sequence is the kernel itself. For the continuous
/// families the full sequence has spectrum `S`, so the inverse kernel is read
/// off `dt^2 / S` sampled on a fine band grid; truncating `R` instead would
/// distort slowly decaying correlations.
fn deconvolve_model<T: Real>(
    model: &NoiseModel<T>,
    y: &ZeroExtendedSequence<T>,
    pad: usize,
) -> Result<ZeroExtendedSequence<T>> {
    if let Psd::Correlation { lags } = model.psd_family() {
        let last = lags.len() as i64 - 1;
        let values: Vec<Complex<T>> = (-last..=last)
            .map(|k| if k < 0 { lags[(-k) as usize].conj() } else { lags[k as usize] })
            .collect();
        let q = ZeroExtendedSequence::from_column(-last, &values)?;
        return deconvolve_checked(&q, y, pad, true);
    }
    let max_lag = (y.support_len() - 1 + pad) as i64;
    let m = (KERNEL_OVERSAMPLING * (2 * max_lag as usize + 1)).max(4096).next_power_of_two();
    let s = model.ensure_positive_on(&grid_frequencies(m, model.dt()))?;
    // the kernel is built on a unit-step grid, where dt^2 / S reads dt / S
    let inv = CMatrix::from_fn(m, 1, |j, _| creal(model.dt() / s[j]));
    let kernel = idtft(&Spectrum::new(T::one(), inv), -max_lag, max_lag)?;
    gen_convolve(&kernel, y)?.window(y.start() - pad as i64, y.end() + pad as i64)
}

/// Generalized least squares on the infinitely zero-extended record.
///
/// The kernel is the full correlation sequence `Q_k = R(k dt)`;
/// `<J|L_Q^-1 J>` and `<J|L_Q^-1 m>` are formed from a single deconvolution
/// of `[J | m]`. The reported covariance `<J|L_Q^-1 J>^-1` is
/// the variance of the infinite-extension estimator. Inner products with the
/// zero-extended `J` only read the deconvolution on the record itself, so
/// `pad` affects the result only through the kernel grid.
pub fn gls_spectral<T: Real>(
    j: &DesignMatrix<T>,
    m: &SampledSignal<T>,
    model: &NoiseModel<T>,
    pad: usize,
) -> Result<Estimate<T>> {
    check_signal(j, m)?;
    check_model_grid(j.dt(), model)?;
    let p = j.n_params();
    let jb = ZeroExtendedSequence::from_design(j);
    let y = jb.hstack(&ZeroExtendedSequence::from_signal(m))?;
    let z = deconvolve_model(model, &y, pad)?;
    let prod = matrix_scalar_product(&jb, &z);
    let a = linalg::symmetrize(&prod.columns(0, p).into_owned());
    let b: CVector<T> = prod.column(p).into_owned();
    let (x_star, v, cond) = solve_hermitian(&a, &b)?;
    let resid = m.values() - j.signal(&x_star);
    Ok(Estimate {
        x_star,
        covariance: Some(v),
        method: Method::GlsSpectral,
        condition: ConditionReport {
            condition_number: cond,
            solve_path: SolvePath::SpectralDeconvolution,
            residual_norm: resid.norm(),
            jitter: T::zero(),
        },
    })
}

/// `x = A^-1 b`, `A^-1` and `cond(A)` for a Hermitian positive-definite `A`.
fn solve_hermitian<T: Real>(a: &CMatrix<T>, b: &CVector<T>) -> Result<(CVector<T>, CMatrix<T>, T)> {
    let chol = linalg::cholesky(a).ok_or_else(|| {
        Error::RankDeficient("spectral normal matrix is not positive definite".into())
    })?;
    let (rank, cond) = linalg::rank_and_condition(a);
    if rank < a.nrows() {
        return Err(Error::RankDeficient(format!(
            "spectral normal matrix has numerical rank {rank} < {}",
            a.nrows()
        )));
    }
    let x = chol.solve(b);
    let v = linalg::symmetrize(&chol.inverse());
    Ok((x, v, cond))
}

/// The `N x N` block of `L_Q^-1` on the record: the weight `P` for which
/// [`gls_spectral`] equals `Ls(P, J, m)`.
pub fn gls_spectral_metric<T: Real>(model: &NoiseModel<T>, n: usize, pad: usize) -> Result<WeightMatrix<T>> {
    let eye = ZeroExtendedSequence::new(1, CMatrix::<T>::identity(n, n))?;
    let z = deconvolve_model(model, &eye, pad)?;
    let block = z.window(1, n as i64)?.into_entries();
    WeightMatrix::custom(linalg::symmetrize(&block))
}

/// `max |Ls(P1, J1) Ls(P0, J0) - Ls(P0~, J0 J1)|`, with
/// `Ls(P, J) = (J'PJ)^-1 J'P`.
///
/// Zero exactly when reducing in two steps equals reducing in one step for
/// every measurement vector.
pub fn transitivity_residual<T: Real>(
    p0: &WeightMatrix<T>,
    p1: &WeightMatrix<T>,
    p0_tilde: &WeightMatrix<T>,
    j0: &CMatrix<T>,
    j1: &CMatrix<T>,
) -> Result<T> {
    if j0.ncols() != j1.nrows() || j0.nrows() < j0.ncols() || j1.nrows() < j1.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "J0 is {}x{} and J1 is {}x{}",
            j0.nrows(),
            j0.ncols(),
            j1.nrows(),
            j1.ncols()
        )));
    }
    if p0_tilde.dim() != j0.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "P0~ is {0}x{0}, J0 has {1} rows",
            p0_tilde.dim(),
            j0.nrows()
        )));
    }
    let step0 = orthonormalize_columns(j0, p0)?.operator();
    let step1 = orthonormalize_columns(j1, p1)?.operator();
    let direct = orthonormalize_columns(&(j0 * j1), p0_tilde)?.operator();
    Ok(max_abs(&(step1 * step0 - direct)))
}

/// `A <= B` in the Loewner order: `eigmin(B - A) >= -tol`.
pub fn loewner_leq<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, tol: T) -> Result<bool> {
    linalg::ensure_hermitian(a, T::lit(linalg::HERMITIAN_TOL), "A")?;
    linalg::ensure_hermitian(b, T::lit(linalg::HERMITIAN_TOL), "B")?;
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(linalg::min_eigenvalue(&(b - a)) >= -tol)
}

/// Checks that `V` is a valid covariance: Hermitian to `1e-12` relative and
/// no eigenvalue below `-1e-10 trace(V)`.
pub fn check_covariance<T: Real>(v: &CMatrix<T>) -> Result<()> {
    linalg::ensure_hermitian(v, T::lit(linalg::HERMITIAN_TOL), "covariance")?;
    let trace = (0..v.nrows()).fold(T::zero(), |acc, i| acc + v[(i, i)].re);
    let low = linalg::min_eigenvalue(v);
    if low < -T::lit(1e-10) * trace.abs() {
        return Err(Error::NotPsd(format!(
            "covariance has eigenvalue {:.3e} with trace {:.3e}",
            low.to_f64_lossy(),
            trace.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Largest entry modulus of `a - b` relative to that of `b`.
pub fn relative_max_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let scale = max_abs(b);
    let d = max_abs(&(a - b));
    if scale > T::zero() {
        d / scale
    } else {
        d
    }
}

/// `|a - b|_F / |b|_F`.
pub fn relative_frobenius<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let nb = b.norm();
    let d = (a - b).norm();
    if nb > T::zero() {
        d / nb
    } else {
        d
    }
}

/// Largest entry modulus of `a - b` relative to that of `b`, for vectors.
pub fn relative_vec_diff<T: Real>(a: &CVector<T>, b: &CVector<T>) -> T {
    let scale = b.iter().fold(T::zero(), |m, z| m.max(cabs(*z)));
    let d = (a - b).iter().fold(T::zero(), |m, z| m.max(cabs(*z)));
    if scale > T::zero() {
        d / scale
    } else {
        d
    }
}
