#![allow(dead_code)]

use colored_lsq::{
    build_design_matrix, BasisSpec, CMatrix, CVector, Complex, DesignMatrix, NoiseModel, Psd, SampledSignal, ZeroExtendedSequence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, complex: bool) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re = gauss(r);
        let im = if complex { gauss(r) } else { 0.0 };
        Complex::new(re, im)
    })
}

pub fn random_vector(r: &mut ChaCha8Rng, n: usize, complex: bool) -> CVector<f64> {
    random_matrix(r, n, 1, complex).column(0).into_owned()
}

pub fn random_design(r: &mut ChaCha8Rng, n: usize, p: usize, dt: f64, complex: bool) -> DesignMatrix<f64> {
    let labels = (0..p).map(|l| format!("f{l}")).collect();
    DesignMatrix::from_entries(random_matrix(r, n, p, complex), dt, labels).unwrap()
}

pub fn random_signal(r: &mut ChaCha8Rng, n: usize, dt: f64, complex: bool) -> SampledSignal<f64> {
    SampledSignal::new(dt, random_vector(r, n, complex)).unwrap()
}

pub fn random_sequence(r: &mut ChaCha8Rng, start: i64, len: usize, cols: usize) -> ZeroExtendedSequence<f64> {
    ZeroExtendedSequence::new(start, random_matrix(r, len, cols, true)).unwrap()
}

/// Moving-average correlation `R_k = sum_i b_i b_{i+k}` plus a white part.
pub fn ma_lags(r: &mut ChaCha8Rng, order: usize, white: f64) -> Vec<Complex<f64>> {
    let b: Vec<f64> = (0..=order).map(|_| gauss(r)).collect();
    let mut lags: Vec<Complex<f64>> = (0..=order)
        .map(|k| c((0..=order - k).map(|i| b[i] * b[i + k]).sum()))
        .collect();
    lags[0].re += white;
    lags
}

pub fn ma_model(r: &mut ChaCha8Rng, order: usize, dt: f64, lags: usize) -> NoiseModel<f64> {
    let white = 0.2 + r.random::<f64>();
    NoiseModel::from_correlation(ma_lags(r, order, white), dt, lags).unwrap()
}

pub fn power_law_model(r: &mut ChaCha8Rng, n: usize, dt: f64, lags: usize) -> NoiseModel<f64> {
    let alpha = r.random_range(-2.0..=2.0);
    let amp = 0.5 + r.random::<f64>();
    NoiseModel::power_law(amp, alpha, colored_lsq::default_f_min(n, dt), dt, lags).unwrap()
}

pub fn tabulated_model(r: &mut ChaCha8Rng, dt: f64, lags: usize) -> NoiseModel<f64> {
    let nyq = 0.5 / dt;
    let k = 6;
    let pts: Vec<(f64, f64)> = (0..=k)
        .map(|i| (nyq * i as f64 / k as f64, 0.1 + 2.0 * r.random::<f64>()))
        .collect();
    NoiseModel::new(Psd::tabulated(&pts).unwrap(), dt, lags).unwrap()
}

/// One of the colored families, chosen at random.
pub fn colored_model(r: &mut ChaCha8Rng, n: usize, dt: f64) -> NoiseModel<f64> {
    match r.random_range(0..3) {
        0 => power_law_model(r, n, dt, n - 1),
        1 => ma_model(r, 3, dt, n - 1),
        _ => tabulated_model(r, dt, n - 1),
    }
}

pub fn max_abs(m: &CMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn rel_vec(a: &CVector<f64>, b: &CVector<f64>) -> f64 {
    colored_lsq::relative_vec_diff(a, b)
}

/// Adaptive Simpson on `[a, b]`, independent of the crate's quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Exact `(J'J)^-1 J'm` for real data, by Gauss-Jordan over the rationals.
pub fn rational_normal_equations(j: &[Vec<f64>], m: &[f64]) -> Vec<f64> {
    let q = |x: f64| BigRational::from_float(x).unwrap();
    let p = j[0].len();
    let jr: Vec<Vec<BigRational>> = j.iter().map(|row| row.iter().map(|&x| q(x)).collect()).collect();
    let mr: Vec<BigRational> = m.iter().map(|&x| q(x)).collect();
    let mut a = vec![vec![BigRational::zero(); p + 1]; p];
    for (row, mv) in jr.iter().zip(&mr) {
        for k in 0..p {
            for l in 0..p {
                a[k][l] += &row[k] * &row[l];
            }
            a[k][p] += &row[k] * mv;
        }
    }
    for col in 0..p {
        let piv = (col..p).find(|&r| !a[r][col].is_zero()).unwrap();
        a.swap(col, piv);
        let inv = BigRational::from_integer(BigInt::from(1)) / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.iter().map(|row| row[p].to_f64().unwrap()).collect()
}

pub fn vandermonde(n: usize, p: usize) -> DesignMatrix<f64> {
    let basis: Vec<BasisSpec> = (0..p as u32).map(|d| BasisSpec::Polynomial { degree: d }).collect();
    build_design_matrix(&basis, n, 1.0 / n as f64).unwrap()
}
