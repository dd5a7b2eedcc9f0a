mod common;

use colored_lsq::*;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn trace(v: &CMatrix<f64>) -> f64 {
    (0..v.nrows()).map(|i| v[(i, i)].re).sum()
}

fn cov_of(e: &Estimate<f64>) -> &CMatrix<f64> {
    e.covariance.as_ref().unwrap()
}

#[test]
fn aitken_dominance_on_random_instances() {
    let mut r = rng(2024);
    for case in 0..100 {
        let n = r.random_range(4..=32);
        let p = r.random_range(1..=4.min(n));
        let j = random_design(&mut r, n, p, 1.0, case % 3 == 0);
        let model = colored_model(&mut r, n, 1.0);
        let omega = build_covariance(&model, n).unwrap();
        let m = random_signal(&mut r, n, 1.0, false);
        let v_ols = ols_covariance_time(&j, &omega.dense()).unwrap();
        let v_gls = gls_time(&j, &m, &omega).unwrap().covariance.unwrap();
        assert!(loewner_leq(&v_gls, &v_ols, 1e-9).unwrap(), "case {case}");
    }
}

#[test]
fn gls_is_invariant_under_covariance_scaling() {
    let mut r = rng(17);
    let n = 20;
    let j = random_design(&mut r, n, 3, 1.0, true);
    let m = random_signal(&mut r, n, 1.0, true);
    let omega = build_covariance(&ma_model(&mut r, 4, 1.0, n - 1), n).unwrap();
    let a = gls_time(&j, &m, &omega).unwrap();
    for scale in [1e-3, 0.5, 7.0, 1e4] {
        let b = gls_time(&j, &m, &omega.scaled(scale)).unwrap();
        assert!(rel_vec(&b.x_star, &a.x_star) <= 1e-12);
        let expect = cov_of(&a).map(|z| z * scale);
        assert!(relative_max_diff(cov_of(&b), &expect) <= 1e-12);
    }
}

#[test]
fn white_noise_collapse_of_every_estimator() {
    let mut r = rng(4);
    let n = 24;
    let j = random_design(&mut r, n, 2, 0.5, false);
    let m = random_signal(&mut r, n, 0.5, false);
    let model = NoiseModel::white_sigma(0.8, 0.5, n - 1).unwrap();
    let omega = build_covariance(&model, n).unwrap();
    let o = ols(&j, &m).unwrap();
    let g = gls_time(&j, &m, &omega).unwrap();
    let s = gls_spectral(&j, &m, &model, 4 * n).unwrap();
    assert!(rel_vec(&g.x_star, &o.x_star) <= 1e-12);
    assert!(rel_vec(&s.x_star, &g.x_star) <= 1e-8);
    assert!(relative_max_diff(cov_of(&s), cov_of(&g)) <= 1e-8);
}

#[test]
fn spectral_gls_close_to_time_gls_for_colored_noise() {
    let n = 32;
    let dt = 1.0;
    let j = build_design_matrix(
        &[BasisSpec::Constant { value: 1.0 }, BasisSpec::Sinusoid { frequency: 0.1, phase: 0.3 }],
        n,
        dt,
    )
    .unwrap();
    let lags = vec![c(1e-4), c(0.5e-4), c(0.2e-4), c(0.05e-4)];
    let model = NoiseModel::from_correlation(lags, dt, n - 1).unwrap();
    let x_true = CVector::from_vec(vec![c(1.0), c(-0.5)]);
    let noise = synthesize_noise(&model, n, 5).unwrap();
    let m = SampledSignal::new(dt, j.signal(&x_true) + noise.values()).unwrap();
    let omega = build_covariance(&model, n).unwrap();
    let t = gls_time(&j, &m, &omega).unwrap();
    let s = gls_spectral(&j, &m, &model, 4 * n).unwrap();
    assert!(rel_vec(&s.x_star, &t.x_star) <= 1e-3);
    assert!(trace(cov_of(&s)) <= trace(cov_of(&t)) * (1.0 + 1e-3));
}

#[test]
fn infinite_extension_never_loses_precision() {
    let mut r = rng(12);
    for _ in 0..40 {
        let n = r.random_range(4..=24);
        let p = r.random_range(1..=3);
        let j = random_design(&mut r, n, p, 1.0, false);
        let model = ma_model(&mut r, 3, 1.0, n - 1);
        let m = random_signal(&mut r, n, 1.0, false);
        let t = gls_time(&j, &m, &build_covariance(&model, n).unwrap()).unwrap();
        let s = gls_spectral(&j, &m, &model, 2 * n).unwrap();
        assert!(loewner_leq(cov_of(&s), cov_of(&t), 1e-9 * trace(cov_of(&t))).unwrap());
    }
}

#[test]
fn spectral_gls_is_least_squares_in_the_induced_metric() {
    let mut r = rng(21);
    let n = 18;
    let j = random_design(&mut r, n, 3, 1.0, true);
    let m = random_signal(&mut r, n, 1.0, true);
    let model = ma_model(&mut r, 2, 1.0, n - 1);
    let s = gls_spectral(&j, &m, &model, 2 * n).unwrap();
    let metric = gls_spectral_metric(&model, n, 2 * n).unwrap();
    let ls = ls_estimate(&metric, &j, &m).unwrap();
    assert!(rel_vec(&s.x_star, &ls.x_star) <= 1e-9);
}

#[test]
fn columns_orthonormal_under_the_induced_metric_decouple() {
    let mut r = rng(6);
    let n = 32;
    let model = ma_model(&mut r, 3, 1.0, n - 1);
    let metric = gls_spectral_metric(&model, n, 4 * n).unwrap();
    let j = random_design(&mut r, n, 2, 1.0, false);
    let od = orthonormalize(&j, &metric).unwrap();
    let jt = DesignMatrix::from_entries(od.j_tilde().clone(), 1.0, vec!["a".into(), "b".into()]).unwrap();
    let m = random_signal(&mut r, n, 1.0, false);
    let v = gls_spectral(&jt, &m, &model, 4 * n).unwrap().covariance.unwrap();
    let ratio = v[(0, 1)].norm() / v[(0, 0)].re.min(v[(1, 1)].re);
    assert!(ratio <= 1e-6, "{ratio:e}");
}

#[test]
fn spectral_gls_error_does_not_grow_with_pad() {
    let mut r = rng(77);
    let n = 16;
    let j = random_design(&mut r, n, 2, 1.0, false);
    let m = random_signal(&mut r, n, 1.0, false);
    let model = ma_model(&mut r, 3, 1.0, n - 1);
    let t = gls_time(&j, &m, &build_covariance(&model, n).unwrap()).unwrap();
    let mut prev = f64::INFINITY;
    for pad in [n, 2 * n, 4 * n] {
        let s = gls_spectral(&j, &m, &model, pad).unwrap();
        let err = rel_vec(&s.x_star, &t.x_star);
        assert!(err <= prev * (1.0 + 1e-6) + 1e-12, "pad {pad}: {err:e} after {prev:e}");
        prev = err;
    }
}

#[test]
fn transitivity_of_generalized_least_squares() {
    let mut r = rng(101);
    let (n0, n1, n2) = (12, 5, 2);
    let j0 = random_matrix(&mut r, n0, n1, false);
    let j1 = random_matrix(&mut r, n1, n2, false);
    let a = random_matrix(&mut r, n0, n0, false);
    let omega = &a * a.adjoint() + CMatrix::identity(n0, n0);
    let p0 = WeightMatrix::inverse_covariance(&omega).unwrap();
    let p1 = WeightMatrix::custom(j0.adjoint() * p0.entries().as_ref() * &j0).unwrap();
    let gls = transitivity_residual(&p0, &p1, &p0, &j0, &j1).unwrap();
    assert!(gls <= 1e-9, "{gls:e}");
    let i0 = WeightMatrix::identity(n0);
    let i1 = WeightMatrix::identity(n1);
    let ols = transitivity_residual(&i0, &i1, &i0, &j0, &j1).unwrap();
    assert!(ols > 1e-3, "{ols:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gls_white_collapse(seed in 0u64..10_000, n in 2usize..40, p in 1usize..5, sigma in 0.1f64..10.0) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let j = random_design(&mut r, n, p, 1.0, seed % 2 == 0);
        let m = random_signal(&mut r, n, 1.0, true);
        let omega = build_covariance(&NoiseModel::white_sigma(sigma, 1.0, n - 1).unwrap(), n).unwrap();
        let g = gls_time(&j, &m, &omega).unwrap();
        let o = ols(&j, &m).unwrap();
        prop_assert!(rel_vec(&g.x_star, &o.x_star) <= 1e-12);
        let vo = ols_covariance_time(&j, &omega.dense()).unwrap();
        prop_assert!(relative_max_diff(cov_of(&g), &vo) <= 1e-10);
    }

    #[test]
    fn ols_matches_general_path(seed in 0u64..10_000, n in 2usize..30, p in 1usize..4) {
        prop_assume!(p <= n);
        let mut r = rng(seed);
        let j = random_design(&mut r, n, p, 1.0, true);
        let m = random_signal(&mut r, n, 1.0, true);
        let a = ols(&j, &m).unwrap();
        let b = ls_estimate(&WeightMatrix::identity(n), &j, &m).unwrap();
        prop_assert_eq!(a.x_star, b.x_star);
    }

    #[test]
    fn covariances_are_valid(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let n = 16;
        let j = random_design(&mut r, n, 3, 1.0, false);
        let model = colored_model(&mut r, n, 1.0);
        let omega = build_covariance(&model, n).unwrap();
        let m = random_signal(&mut r, n, 1.0, false);
        check_covariance(cov_of(&gls_time(&j, &m, &omega).unwrap())).unwrap();
        check_covariance(&ols_covariance_time(&j, &omega.dense()).unwrap()).unwrap();
        check_covariance(&ols_covariance_freq(&j, &model, 8 * n).unwrap()).unwrap();
    }
}

#[test]
fn orthonormal_chain_with_identity_weights() {
    let mut r = rng(55);
    let q = random_matrix(&mut r, 10, 4, false);
    let od = orthonormalize_columns(&q, &WeightMatrix::identity(10)).unwrap();
    let j1 = random_matrix(&mut r, 4, 2, false);
    let i10 = WeightMatrix::identity(10);
    let res = transitivity_residual(&i10, &WeightMatrix::identity(4), &i10, od.j_tilde(), &j1).unwrap();
    assert!(res <= 1e-10, "{res:e}");
}

#[test]
fn monte_carlo_gls_is_unbiased_with_predicted_covariance() {
    let n = 32;
    let j = build_design_matrix(&[BasisSpec::Constant { value: 1.0 }, BasisSpec::Polynomial { degree: 1 }], n, 1.0)
        .unwrap();
    let model = NoiseModel::power_law(1.0, -1.0, default_f_min(n, 1.0), 1.0, n - 1).unwrap();
    let x = CVector::from_vec(vec![c(2.0), c(-0.1)]);
    let trials = 4000;
    let out = monte_carlo(&j, &x, &model, &[Method::Ols, Method::GlsTime, Method::GlsSpectral], trials, 3,
        SpectralOptions::default()).unwrap();
    for s in &out {
        for i in 0..2 {
            let bound = 4.0 * (s.predicted[(i, i)].re / trials as f64).sqrt();
            assert!(s.bias[i].norm() <= bound, "{:?} bias {}", s.method, s.bias[i]);
        }
        let err = max_abs(&(&s.empirical - &s.predicted)) / max_abs(&s.predicted);
        assert!(err <= 0.15, "{:?}: {err}", s.method);
    }
    // the time-domain GLS estimator is the one whose reported and true covariance agree
    assert!(relative_max_diff(&out[1].reported, &out[1].predicted) < 1e-10);
}

#[test]
fn spectral_gls_handles_red_power_laws() {
    let mut r = rng(90);
    for alpha in [-2.0, -1.5, -1.0, 0.5, 2.0] {
        let n = 32;
        let j = random_design(&mut r, n, 2, 1.0, false);
        let m = random_signal(&mut r, n, 1.0, false);
        let model = NoiseModel::power_law(1.0, alpha, default_f_min(n, 1.0), 1.0, n - 1).unwrap();
        let t = gls_time(&j, &m, &build_covariance(&model, n).unwrap()).unwrap();
        let s = gls_spectral(&j, &m, &model, 4 * n).unwrap();
        check_covariance(cov_of(&s)).unwrap();
        // the infinite extension can only add information
        assert!(loewner_leq(cov_of(&s), cov_of(&t), 1e-6 * trace(cov_of(&t))).unwrap(), "alpha {alpha}");
        assert!(trace(cov_of(&s)) >= 0.2 * trace(cov_of(&t)), "alpha {alpha}");
    }
}
