//! Measurement model: sampled signals, design matrices, weight matrices and
//! the general weighted least-squares map `(P, J, m) -> (J'PJ)^-1 J'P m`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{orthonormalize_columns, OrthonormalizedDesign};
use crate::linalg::{self, HERMITIAN_TOL};
use crate::scalar::{cis, creal, is_finite, two_pi, CMatrix, CVector, Complex, Real};

/// Uniformly sampled complex time series; sample `i` sits at time
/// `(origin_index + i) * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T: Real> {
    dt: T,
    values: CVector<T>,
    origin_index: i64,
}

impl<T: Real> SampledSignal<T> {
    pub fn new(dt: T, values: CVector<T>) -> Result<Self> {
        Self::with_origin(dt, values, 1)
    }

    pub fn with_origin(dt: T, values: CVector<T>, origin_index: i64) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidSignal(format!(
                "time step must be positive and finite, got {}",
                dt.to_f64_lossy()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if let Some(i) = values.iter().position(|z| !is_finite(*z)) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self { dt, values, origin_index })
    }

    pub fn from_real(dt: T, values: &[T]) -> Result<Self> {
        Self::new(dt, CVector::from_iterator(values.len(), values.iter().map(|&x| creal(x))))
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn values(&self) -> &CVector<T> {
        &self.values
    }

    pub fn into_values(self) -> CVector<T> {
        self.values
    }

    pub fn origin_index(&self) -> i64 {
        self.origin_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sampling time of the `i`-th stored sample.
    pub fn time(&self, i: usize) -> T {
        T::lit((self.origin_index + i as i64) as f64) * self.dt
    }
}

/// A basis function `f_l(t)` evaluated on the sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BasisSpec {
    /// `f(t) = value`.
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `f(t) = t^degree`.
    Polynomial { degree: u32 },
    /// `f(t) = sin(2 pi frequency t + phase)`.
    Sinusoid {
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `f(t) = exp(i 2 pi frequency t)`.
    ComplexExponential { frequency: f64 },
    /// Explicit samples, one per measurement.
    Tabulated {
        values: Vec<f64>,
        #[serde(default)]
        label: Option<String>,
    },
}

fn one() -> f64 {
    1.0
}

impl BasisSpec {
    pub fn label(&self) -> String {
        match self {
            BasisSpec::Constant { value } if *value == 1.0 => "1".into(),
            BasisSpec::Constant { value } => format!("{value}"),
            BasisSpec::Polynomial { degree: 0 } => "1".into(),
            BasisSpec::Polynomial { degree: 1 } => "t".into(),
            BasisSpec::Polynomial { degree } => format!("t^{degree}"),
            BasisSpec::Sinusoid { frequency, phase } if *phase == 0.0 => {
                format!("sin(2pi*{frequency}*t)")
            }
            BasisSpec::Sinusoid { frequency, phase } => format!("sin(2pi*{frequency}*t+{phase})"),
            BasisSpec::ComplexExponential { frequency } => format!("exp(i2pi*{frequency}*t)"),
            BasisSpec::Tabulated { label: Some(l), .. } => l.clone(),
            BasisSpec::Tabulated { .. } => "tabulated".into(),
        }
    }

    /// Evaluates the function at sample `row` (0-based) of time `t`.
    fn eval<T: Real>(&self, row: usize, t: T) -> Result<Complex<T>> {
        let z = match self {
            BasisSpec::Constant { value } => creal(T::lit(*value)),
            BasisSpec::Polynomial { degree } => creal(t.powi(*degree as i32)),
            BasisSpec::Sinusoid { frequency, phase } => {
                creal((two_pi::<T>() * T::lit(*frequency) * t + T::lit(*phase)).sin())
            }
            BasisSpec::ComplexExponential { frequency } => {
                cis(two_pi::<T>() * T::lit(*frequency) * t)
            }
            BasisSpec::Tabulated { values, .. } => match values.get(row) {
                Some(v) => creal(T::lit(*v)),
                None => {
                    return Err(Error::InvalidBasis(format!(
                        "tabulated basis has {} samples, row {row} requested",
                        values.len()
                    )))
                }
            },
        };
        if !is_finite(z) {
            return Err(Error::InvalidBasis(format!(
                "basis '{}' is not finite at t = {}",
                self.label(),
                t.to_f64_lossy()
            )));
        }
        Ok(z)
    }
}

/// The `N x p` matrix `J` with `J_kl = f_l(k dt)`, verified to have full
/// column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T: Real> {
    entries: CMatrix<T>,
    dt: T,
    origin_index: i64,
    labels: Vec<String>,
    condition: T,
}

impl<T: Real> DesignMatrix<T> {
    /// Wraps explicit entries. Fails with `RankDeficient` when the numerical
    /// rank is below the column count.
    pub fn from_entries(entries: CMatrix<T>, dt: T, labels: Vec<String>) -> Result<Self> {
        Self::from_entries_at(entries, dt, 1, labels)
    }

    pub fn from_entries_at(
        entries: CMatrix<T>,
        dt: T,
        origin_index: i64,
        mut labels: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = entries.shape();
        if p == 0 || n == 0 {
            return Err(Error::InvalidBasis("design matrix needs at least one row and column".into()));
        }
        if p > n {
            return Err(Error::RankDeficient(format!("{p} parameters but only {n} samples")));
        }
        if !(dt > T::zero()) {
            return Err(Error::InvalidBasis("time step must be positive".into()));
        }
        if entries.iter().any(|z| !is_finite(*z)) {
            return Err(Error::InvalidBasis("design matrix has non-finite entries".into()));
        }
        let (rank, condition) = linalg::rank_and_condition(&entries);
        if rank < p {
            return Err(Error::RankDeficient(format!(
                "design matrix has numerical rank {rank} < {p}"
            )));
        }
        labels.resize_with(p, String::new);
        Ok(Self { entries, dt, origin_index, labels, condition })
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn origin_index(&self) -> i64 {
        self.origin_index
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.entries.ncols()
    }

    /// Full column rank is a construction invariant.
    pub fn rank(&self) -> usize {
        self.n_params()
    }

    /// Spectral condition number `sigma_max / sigma_min`.
    pub fn condition(&self) -> T {
        self.condition
    }

    /// `J x`.
    pub fn signal(&self, x: &CVector<T>) -> CVector<T> {
        &self.entries * x
    }
}

/// Samples `basis` at `t = k dt` for `k = 1..=n`.
pub fn build_design_matrix<T: Real>(basis: &[BasisSpec], n: usize, dt: T) -> Result<DesignMatrix<T>> {
    build_design_matrix_at(basis, n, dt, 1)
}

/// Samples `basis` at `t = k dt` for `k = origin..origin + n`.
pub fn build_design_matrix_at<T: Real>(
    basis: &[BasisSpec],
    n: usize,
    dt: T,
    origin_index: i64,
) -> Result<DesignMatrix<T>> {
    if basis.is_empty() {
        return Err(Error::InvalidBasis("empty basis".into()));
    }
    if n == 0 {
        return Err(Error::InvalidBasis("no samples requested".into()));
    }
    for b in basis {
        if let BasisSpec::Tabulated { values, .. } = b {
            if values.len() != n {
                return Err(Error::InvalidBasis(format!(
                    "tabulated basis has {} samples, expected {n}",
                    values.len()
                )));
            }
        }
    }
    let mut entries = CMatrix::<T>::zeros(n, basis.len());
    for (l, spec) in basis.iter().enumerate() {
        for row in 0..n {
            let t = T::lit((origin_index + row as i64) as f64) * dt;
            entries[(row, l)] = spec.eval(row, t)?;
        }
    }
    let labels = basis.iter().map(BasisSpec::label).collect();
    DesignMatrix::from_entries_at(entries, dt, origin_index, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Identity,
    InverseCovariance,
    Custom,
}

/// Hermitian positive-definite weight `P` defining `<y|z>_P = y' P z`.
///
/// The identity is stored implicitly so that ordinary least squares on long
/// records does not allocate an `N x N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Real> {
    kind: WeightKind,
    dim: usize,
    dense: Option<CMatrix<T>>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self { kind: WeightKind::Identity, dim: n, dense: None }
    }

    /// Arbitrary Hermitian positive-definite weight.
    pub fn custom(entries: CMatrix<T>) -> Result<Self> {
        Self::checked(entries, WeightKind::Custom)
    }

    /// `P = Omega^-1` for a covariance `Omega`.
    ///
    /// Only for the generic weighted path; the GLS estimator itself works from
    /// a Cholesky factor of `Omega` and never forms this inverse.
    pub fn inverse_covariance(omega: &CMatrix<T>) -> Result<Self> {
        linalg::ensure_hermitian(omega, T::lit(HERMITIAN_TOL), "covariance")?;
        let chol = linalg::cholesky(omega).ok_or_else(|| {
            Error::NotPositiveDefinite("covariance is not positive definite".into())
        })?;
        let inv = linalg::symmetrize(&chol.inverse());
        Self::checked(inv, WeightKind::InverseCovariance)
    }

    fn checked(entries: CMatrix<T>, kind: WeightKind) -> Result<Self> {
        linalg::ensure_hermitian(&entries, T::lit(HERMITIAN_TOL), "weight matrix")?;
        if linalg::cholesky(&entries).is_none() {
            return Err(Error::NotPositiveDefinite(
                "Cholesky factorization of the weight matrix failed".into(),
            ));
        }
        Ok(Self { kind, dim: entries.nrows(), dense: Some(entries) })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense entries (materialized for the identity).
    pub fn entries(&self) -> Cow<'_, CMatrix<T>> {
        match &self.dense {
            Some(m) => Cow::Borrowed(m),
            None => Cow::Owned(CMatrix::identity(self.dim, self.dim)),
        }
    }

    /// `c P` for `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(Error::NotPositiveDefinite("scale must be positive".into()));
        }
        let dense = self.entries().map(|z| z.scale(c));
        Ok(Self { kind: WeightKind::Custom, dim: self.dim, dense: Some(dense) })
    }

    /// `P X`.
    pub fn apply(&self, x: &CMatrix<T>) -> CMatrix<T> {
        match &self.dense {
            Some(p) => p * x,
            None => x.clone(),
        }
    }

    pub fn apply_vec(&self, x: &CVector<T>) -> CVector<T> {
        match &self.dense {
            Some(p) => p * x,
            None => x.clone(),
        }
    }
}

/// `y' P z`.
pub fn weighted_inner<T: Real>(y: &CVector<T>, z: &CVector<T>, p: &WeightMatrix<T>) -> Result<Complex<T>> {
    if y.len() != z.len() || y.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {} with a {}x{} weight",
            y.len(),
            z.len(),
            p.dim(),
            p.dim()
        )));
    }
    Ok(y.dotc(&p.apply_vec(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    GlsTime,
    GlsSpectral,
    MatchedFilter,
    /// Generic weight that is neither the identity nor an inverse covariance.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Modified Gram-Schmidt under `<.|.>_P`, then a triangular solve.
    GramSchmidt,
    /// Cholesky solve of `J'PJ x = J'P m`.
    NormalEquations,
    /// Cholesky whitening by the covariance, then Gram-Schmidt.
    WhitenedGramSchmidt,
    /// Zero-extended sequences and the inverse generalized convolution.
    SpectralDeconvolution,
    /// Band quadrature of the one-parameter spectral formulas.
    SpectralQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport<T: Real> {
    /// Condition number of the system actually solved.
    pub condition_number: T,
    pub solve_path: SolvePath,
    /// `|m - J x*|_P`; for the spectral paths, the unweighted residual norm.
    pub residual_norm: T,
    /// Diagonal jitter added to a covariance before factorization.
    pub jitter: T,
}

/// Fitted parameters with their covariance and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T: Real> {
    pub x_star: CVector<T>,
    /// `V_x*`; `None` until a noise model has been supplied.
    pub covariance: Option<CMatrix<T>>,
    pub method: Method,
    pub condition: ConditionReport<T>,
}

impl<T: Real> Estimate<T> {
    pub fn with_covariance(mut self, v: CMatrix<T>) -> Self {
        self.covariance = Some(v);
        self
    }

    /// `sqrt(V_ii)`, empty without a covariance.
    pub fn standard_errors(&self) -> Vec<T> {
        self.covariance
            .as_ref()
            .map(|v| (0..v.nrows()).map(|i| v[(i, i)].re.max(T::zero()).sqrt()).collect())
            .unwrap_or_default()
    }
}

fn method_for(kind: WeightKind) -> Method {
    match kind {
        WeightKind::Identity => Method::Ols,
        WeightKind::InverseCovariance => Method::GlsTime,
        WeightKind::Custom => Method::Weighted,
    }
}

fn check_dims<T: Real>(p: &WeightMatrix<T>, j: &DesignMatrix<T>, n: usize) -> Result<()> {
    if p.dim() != j.n_samples() || n != j.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "weight is {0}x{0}, design has {1} rows, data has {2} samples",
            p.dim(),
            j.n_samples(),
            n
        )));
    }
    Ok(())
}

fn check_signal_grid<T: Real>(j: &DesignMatrix<T>, m: &SampledSignal<T>) -> Result<()> {
    let tol = T::lit(1e-9) * j.dt();
    if (j.dt() - m.dt()).abs() > tol {
        return Err(Error::DimensionMismatch(format!(
            "design time step {} differs from signal time step {}",
            j.dt().to_f64_lossy(),
            m.dt().to_f64_lossy()
        )));
    }
    Ok(())
}

/// `|r|_P`.
pub(crate) fn weighted_norm<T: Real>(r: &CVector<T>, p: &WeightMatrix<T>) -> T {
    r.dotc(&p.apply_vec(r)).re.max(T::zero()).sqrt()
}

/// General least squares `x* = (J'PJ)^-1 J'P m` via P-orthonormalization.
pub fn ls_estimate<T: Real>(
    p: &WeightMatrix<T>,
    j: &DesignMatrix<T>,
    m: &SampledSignal<T>,
) -> Result<Estimate<T>> {
    ls_estimate_with(p, j, m, SolvePath::GramSchmidt)
}

/// As [`ls_estimate`], choosing between the Gram-Schmidt route and explicit
/// normal equations.
pub fn ls_estimate_with<T: Real>(
    p: &WeightMatrix<T>,
    j: &DesignMatrix<T>,
    m: &SampledSignal<T>,
    path: SolvePath,
) -> Result<Estimate<T>> {
    check_dims(p, j, m.len())?;
    check_signal_grid(j, m)?;
    let (x_star, condition_number) = match path {
        SolvePath::NormalEquations => solve_normal_equations(p, j.entries(), m.values())?,
        _ => {
            let od = orthonormalize_columns(j.entries(), p)?;
            (od.solve(m.values()), od.condition())
        }
    };
    let residual = m.values() - j.signal(&x_star);
    Ok(Estimate {
        x_star,
        covariance: None,
        method: method_for(p.kind()),
        condition: ConditionReport {
            condition_number,
            solve_path: if path == SolvePath::NormalEquations {
                SolvePath::NormalEquations
            } else {
                SolvePath::GramSchmidt
            },
            residual_norm: weighted_norm(&residual, p),
            jitter: T::zero(),
        },
    })
}

pub(crate) fn solve_normal_equations<T: Real>(
    p: &WeightMatrix<T>,
    j: &CMatrix<T>,
    m: &CVector<T>,
) -> Result<(CVector<T>, T)> {
    let pj = p.apply(j);
    let gram = linalg::symmetrize(&j.ad_mul(&pj));
    let (_, cond) = linalg::rank_and_condition(&gram);
    let rhs = pj.ad_mul(m);
    let chol = linalg::cholesky(&gram)
        .ok_or_else(|| Error::RankDeficient("J'PJ is not positive definite".into()))?;
    let x = chol.solve(&rhs);
    Ok((CVector::from_iterator(x.len(), x.iter().copied()), cond))
}

/// Sandwich covariance `(J'PJ)^-1 J'P' Omega P J (J'PJ)^-1`.
pub fn ls_covariance<T: Real>(
    p: &WeightMatrix<T>,
    j: &DesignMatrix<T>,
    omega: &CMatrix<T>,
) -> Result<CMatrix<T>> {
    if omega.nrows() != j.n_samples() || omega.ncols() != j.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{}, design has {} rows",
            omega.nrows(),
            omega.ncols(),
            j.n_samples()
        )));
    }
    check_dims(p, j, j.n_samples())?;
    linalg::ensure_hermitian(omega, T::lit(HERMITIAN_TOL), "covariance")?;
    let od = orthonormalize_columns(j.entries(), p)?;
    Ok(od.sandwich(omega))
}

/// Convenience: [`ls_estimate`] followed by [`ls_covariance`].
pub fn ls_fit<T: Real>(
    p: &WeightMatrix<T>,
    j: &DesignMatrix<T>,
    m: &SampledSignal<T>,
    omega: &CMatrix<T>,
) -> Result<Estimate<T>> {
    let est = ls_estimate(p, j, m)?;
    let v = ls_covariance(p, j, omega)?;
    Ok(est.with_covariance(v))
}

impl<T: Real> OrthonormalizedDesign<T> {
    /// `C J~' P Omega P J~ C'`, symmetrized.
    pub(crate) fn sandwich(&self, omega: &CMatrix<T>) -> CMatrix<T> {
        let b = self.p_j_tilde();
        let inner = b.ad_mul(&(omega * b));
        let c = self.c();
        linalg::symmetrize(&(c * inner * c.adjoint()))
    }
}
