mod common;

use colored_lsq::*;
use common::*;
use proptest::prelude::*;
use std::f64::consts::PI;

/// `int S(f) exp(i 2 pi k f dt) df` by adaptive Simpson, split at `cuts`.
fn correlation_oracle(model: &NoiseModel<f64>, k: i64, cuts: &[f64]) -> Complex<f64> {
    let dt = model.dt();
    let nyq = 0.5 / dt;
    let mut pts = vec![-nyq, nyq];
    pts.extend(cuts.iter().copied().filter(|f| f.abs() < nyq));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut re = 0.0;
    let mut im = 0.0;
    for w in pts.windows(2) {
        let th = 2.0 * PI * k as f64 * dt;
        re += simpson(&|f| model.psd(f) * (th * f).cos(), w[0], w[1], 1e-13);
        im += simpson(&|f| model.psd(f) * (th * f).sin(), w[0], w[1], 1e-13);
    }
    Complex::new(re, im)
}

fn sample_covariance(draws: &[CVector<f64>]) -> (CVector<f64>, CMatrix<f64>) {
    let n = draws[0].len();
    let t = draws.len() as f64;
    let mean = draws.iter().fold(CVector::zeros(n), |a, d| a + d) / c(t);
    let mut cov = CMatrix::zeros(n, n);
    for d in draws {
        let r = d - &mean;
        cov += &r * r.adjoint();
    }
    (mean, cov / c(t - 1.0))
}

#[test]
fn white_correlation_is_sigma_squared_impulse() {
    let m = NoiseModel::<f64>::white(0.3 * 0.3 * 0.5, 0.5, 6).unwrap();
    let r = m.correlation();
    assert!((r[0].re - 0.09).abs() < 1e-15);
    for (k, rk) in r.iter().enumerate().skip(1) {
        // band integral of a constant: level sin(pi k) / (pi k dt)
        let oracle = 0.045 * (PI * k as f64).sin() / (PI * k as f64 * 0.5);
        assert!((rk - c(oracle)).norm() < 1e-15);
    }
}

#[test]
fn power_law_covariance_matches_direct_quadrature() {
    let n = 16;
    let dt = 0.5;
    let f_min = default_f_min(n, dt);
    let model = NoiseModel::power_law(1.0, -1.0, f_min, dt, n - 1).unwrap();
    let omega = build_covariance(&model, n).unwrap().dense();
    let mut cuts = vec![0.0, f_min, -f_min];
    for i in 1..12 {
        let f = f_min * 2f64.powi(i);
        cuts.push(f);
        cuts.push(-f);
    }
    for i in 0..n {
        for j in 0..n {
            let oracle = correlation_oracle(&model, i as i64 - j as i64, &cuts);
            let err = (omega[(i, j)] - oracle).norm();
            assert!(err <= 1e-8 * omega[(0, 0)].re, "({i},{j}): {err:e}");
        }
    }
}

#[test]
fn spectral_lines_give_a_cosine() {
    // two narrow lines at +/- f0 of total power 1
    let f0 = 0.2;
    let w = 1e-6;
    let h = 0.5 / (2.0 * w);
    let pts = [(f0 - w, h), (f0 + w, h)];
    let mut table = vec![(0.0, 0.0), (f0 - w - 1e-15, 0.0)];
    table.extend(pts);
    table.push((f0 + w + 1e-15, 0.0));
    let psd = Psd::tabulated(&table).unwrap();
    let r = psd_to_correlation(&psd, 6, 1.0);
    for (k, z) in r.iter().enumerate() {
        // two-point rule: the lines at +/- f0
        let oracle = 0.5 * (2.0 * PI * k as f64 * f0).cos() + 0.5 * (-2.0 * PI * k as f64 * f0).cos();
        assert!((z.re - oracle).abs() < 1e-6 && z.im.abs() < 1e-12, "lag {k}: {z} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn correlation_is_hermitian_and_bounded(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let model = colored_model(&mut r, 24, 0.5);
        let r0 = model.correlation_at(0);
        prop_assert!(r0.re > 0.0 && r0.im.abs() < 1e-14 * r0.re);
        for k in 1..24i64 {
            prop_assert_eq!(model.correlation_at(-k), model.correlation_at(k).conj());
            prop_assert!(model.correlation_at(k).norm() <= r0.re * (1.0 + 1e-12));
        }
    }

    #[test]
    fn wiener_khintchine_consistency(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let n = 12;
        let model = if seed % 2 == 0 { tabulated_model(&mut r, 1.0, n) } else { power_law_model(&mut r, n, 1.0, n) };
        let mut cuts = vec![0.0];
        match model.psd_family() {
            Psd::Tabulated { freqs, .. } => cuts.extend(freqs.iter().copied()),
            Psd::PowerLaw { f_min, .. } => {
                for i in 0..12 {
                    cuts.push(f_min * 2f64.powi(i));
                    cuts.push(-f_min * 2f64.powi(i));
                }
            }
            _ => {}
        }
        let r0 = model.correlation()[0].re;
        for k in 0..=n as i64 {
            let oracle = correlation_oracle(&model, k, &cuts);
            prop_assert!((model.correlation_at(k) - oracle).norm() <= 1e-8 * r0);
        }
    }
}

#[test]
fn correlation_sequence_transforms_back_to_the_psd() {
    // smooth positive table, sampled correlation truncated far out
    let pts = [(0.0, 2.0), (0.1, 1.8), (0.2, 1.2), (0.3, 0.8), (0.4, 0.6), (0.5, 0.55)];
    let k = 400usize;
    let model = NoiseModel::new(Psd::tabulated(&pts).unwrap(), 1.0, k).unwrap();
    let lags: Vec<Complex<f64>> = (-(k as i64)..=k as i64).map(|i| model.correlation_at(i)).collect();
    let seq = ZeroExtendedSequence::from_column(-(k as i64), &lags).unwrap();
    let spec = dtft(&seq, 1.0, 4 * k).unwrap();
    for (j, &f) in spec.freqs().iter().enumerate() {
        let s = model.psd(f);
        let err = (spec.values()[(j, 0)].re - s).abs() / s;
        assert!(err <= 0.02, "f = {f}: {err}");
    }
}

#[test]
fn white_synthesis_statistics() {
    let n = 32;
    let trials = 10_000u64;
    let model = NoiseModel::white_sigma(1.0, 1.0, n - 1).unwrap();
    let synth = NoiseSynthesizer::new(&model, n).unwrap();
    let draws: Vec<CVector<f64>> = (0..trials).map(|t| synth.draw(99, t)).collect();
    let (mean, cov) = sample_covariance(&draws);
    let bound = 4.0 / (trials as f64).sqrt();
    assert!(mean.iter().all(|z| z.norm() <= bound));
    let err = max_abs(&(cov - CMatrix::identity(n, n)));
    assert!(err <= 0.1, "{err}");
}

#[test]
fn colored_synthesis_statistics_on_both_paths() {
    let n = 32;
    let trials = 10_000u64;
    for alpha in [-1.0, -2.0] {
        let model = NoiseModel::power_law(1.0, alpha, default_f_min(n, 1.0), 1.0, n - 1).unwrap();
        let synth = NoiseSynthesizer::new(&model, n).unwrap();
        let expected = if alpha == -2.0 { SynthesisPath::Cholesky } else { SynthesisPath::CirculantEmbedding };
        assert_eq!(synth.path(), expected);
        let omega = build_covariance(&model, n).unwrap().dense();
        let draws: Vec<CVector<f64>> = (0..trials).map(|t| synth.draw(7, t)).collect();
        let (mean, cov) = sample_covariance(&draws);
        for i in 0..n {
            let sd = omega[(i, i)].re.sqrt();
            assert!(mean[i].norm() <= 4.0 * sd / (trials as f64).sqrt());
        }
        let err = max_abs(&(cov - &omega)) / max_abs(&omega);
        assert!(err <= 0.1, "alpha {alpha}: {err}");
    }
}

#[test]
fn complex_noise_has_the_complex_covariance() {
    let pts = [(-0.5, 0.2), (-0.1, 0.5), (0.05, 3.0), (0.3, 1.0), (0.5, 0.4)];
    let n = 16;
    let model = NoiseModel::new(Psd::tabulated(&pts).unwrap(), 1.0, n - 1).unwrap();
    let synth = NoiseSynthesizer::new(&model, n).unwrap();
    let omega = build_covariance(&model, n).unwrap().dense();
    let draws: Vec<CVector<f64>> = (0..10_000).map(|t| synth.draw(1, t)).collect();
    let (_, cov) = sample_covariance(&draws);
    let err = max_abs(&(cov - &omega)) / max_abs(&omega);
    assert!(err <= 0.1, "{err}");
}

#[test]
fn synthesis_is_reproducible() {
    let model = NoiseModel::power_law(2.0, -0.5, 0.01, 1.0, 63).unwrap();
    let a = synthesize_noise(&model, 64, 1234).unwrap();
    let b = synthesize_noise(&model, 64, 1234).unwrap();
    assert_eq!(a, b);
    let z = synthesize_noise(&NoiseModel::white_sigma(0.0, 1.0, 0).unwrap(), 8, 5).unwrap();
    assert!(z.values().iter().all(|v| v.norm() == 0.0));
}
