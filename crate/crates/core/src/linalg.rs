//! Small dense helpers over complex matrices that the public modules share.

use nalgebra::{Cholesky, Dyn};

use crate::error::{Error, Result};
use crate::scalar::{cabs, max_abs, CMatrix, Real};

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// `max |A - A^H| / max |A|`, zero for the zero matrix.
pub fn hermitian_defect<T: Real>(a: &CMatrix<T>) -> T {
    if !a.is_square() {
        return T::max_value().unwrap_or_else(T::one);
    }
    let scale = max_abs(a);
    if scale == T::zero() {
        return T::zero();
    }
    let n = a.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = cabs(a[(i, j)] - a[(j, i)].conj());
            worst = worst.max(d);
        }
    }
    worst / scale
}

pub fn ensure_hermitian<T: Real>(a: &CMatrix<T>, tol: T, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotHermitian(format!(
            "{what} is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = hermitian_defect(a);
    if defect > tol {
        return Err(Error::NotHermitian(format!(
            "{what} has relative Hermitian defect {:.3e}",
            defect.to_f64_lossy()
        )));
    }
    Ok(())
}

/// `(A + A^H) / 2`.
pub fn symmetrize<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    (a + a.adjoint()).map(|z| z.scale(half))
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
///
/// nalgebra's complex factorization takes complex square roots and so never
/// fails on indefinite input; a pivot is accepted only when it is real and
/// positive up to rounding.
pub fn cholesky<T: Real>(a: &CMatrix<T>) -> Option<Cholesky<nalgebra::Complex<T>, Dyn>> {
    let c = Cholesky::new(a.clone())?;
    let l = c.l_dirty();
    let ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > T::zero() && d.re.is_finite() && d.im.abs() <= T::lit(1e-6) * d.re
    });
    ok.then_some(c)
}

/// Cholesky factorization, retried once with `jitter` added to the diagonal.
///
/// Returns the factor and the jitter that was actually applied.
pub fn cholesky_jittered<T: Real>(
    a: &CMatrix<T>,
    jitter: T,
) -> Option<(Cholesky<nalgebra::Complex<T>, Dyn>, T)> {
    if let Some(c) = cholesky(a) {
        return Some((c, T::zero()));
    }
    if jitter <= T::zero() {
        return None;
    }
    let mut shifted = a.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)].re += jitter;
    }
    cholesky(&shifted).map(|c| (c, jitter))
}

pub fn singular_values<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<T> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Numerical rank with cutoff `max(rows, cols) * eps * sigma_max`, plus the
/// spectral condition number of the matrix.
pub fn rank_and_condition<T: Real>(a: &CMatrix<T>) -> (usize, T) {
    let sv = singular_values(a);
    let Some(&smax) = sv.first() else {
        return (0, T::zero());
    };
    let n = a.nrows().max(a.ncols());
    let cutoff = T::lit(n as f64) * T::eps() * smax;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let smin = *sv.last().unwrap_or(&T::zero());
    let cond = if smin > T::zero() { smax / smin } else { T::max_value().unwrap_or_else(T::one) };
    (rank, cond)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> T {
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or_else(T::one), |m, v| m.min(v))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn upper_triangular_inverse<T: Real>(r: &CMatrix<T>) -> Option<CMatrix<T>> {
    let p = r.nrows();
    r.solve_upper_triangular(&CMatrix::<T>::identity(p, p))
}
