use crate::config::{Command, Format, MethodArg, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::*;
use colored_lsq::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Runs the configured command and writes its output.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate()?;
    let text = match cfg.command {
        Command::Fit => fit(cfg)?,
        Command::Simulate => simulate(cfg)?,
        Command::Compare => compare(cfg)?,
        Command::MismatchScan => mismatch(cfg)?,
    };
    write_output(cfg.out.as_deref(), &text)
}

/// Sampling grid shared by the commands: from the dataset when given.
struct Grid {
    n: usize,
    dt: f64,
    origin: i64,
    data: Option<Dataset>,
}

fn grid(cfg: &RunConfig) -> CliResult<Grid> {
    if let Some(path) = &cfg.data {
        let d = parse_dataset(&read_file(path)?)?;
        return Ok(Grid { n: d.values.len(), dt: d.dt, origin: d.origin_index, data: Some(d) });
    }
    match cfg.n {
        Some(0) => Err(CliError::config("--n must be positive")),
        Some(n) => Ok(Grid { n, dt: cfg.dt, origin: 1, data: None }),
        None => Err(CliError::config("give --n or --data to fix the record length")),
    }
}

fn basis(cfg: &RunConfig) -> CliResult<Vec<BasisSpec>> {
    json_arg(cfg.model.as_deref().unwrap_or_default(), "model")
}

fn noise(cfg: &RunConfig, g: &Grid) -> CliResult<Option<(NoiseSpec, NoiseModel<f64>)>> {
    let Some(arg) = &cfg.noise else { return Ok(None) };
    let spec: NoiseSpec = json_arg(arg, "noise")?;
    let model = spec.build::<f64>(g.dt, g.n, g.n - 1)?;
    Ok(Some((spec, model)))
}

fn required(model: &Option<(NoiseSpec, NoiseModel<f64>)>) -> CliResult<&NoiseModel<f64>> {
    model.as_ref().map(|m| &m.1).ok_or_else(|| CliError::config("--noise is required"))
}

fn x_true(cfg: &RunConfig, p: usize) -> CliResult<CVector<f64>> {
    let x = match &cfg.x_true {
        Some(s) => parse_complex_list(s, "x-true")?,
        None => vec![Complex::new(0.0, 0.0); p],
    };
    if x.len() != p {
        return Err(CliError::config(format!("{} true parameters for {p} basis functions", x.len())));
    }
    Ok(CVector::from_vec(x))
}

fn single_template(j: &DesignMatrix<f64>) -> CliResult<ZeroExtendedSequence<f64>> {
    if j.n_params() != 1 {
        return Err(CliError::config(format!("a single template is needed, the model has {}", j.n_params())));
    }
    Ok(ZeroExtendedSequence::from_design(j))
}

fn method_name(m: Method) -> Value {
    serde_json::to_value(m).unwrap_or(Value::Null)
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn fit(cfg: &RunConfig) -> CliResult<String> {
    let clock = Instant::now();
    let g = grid(cfg)?;
    let data = g.data.as_ref().expect("fit reads a dataset");
    let j = build_design_matrix_at(&basis(cfg)?, g.n, g.dt, g.origin)?;
    let m = SampledSignal::with_origin(g.dt, data.vector(), g.origin)?;
    let nm = noise(cfg, &g)?;
    let grid_len = cfg.grid_factor * g.n;
    let est = match cfg.method {
        MethodArg::Ols => {
            let e = ols(&j, &m)?;
            match &nm {
                Some((_, model)) => {
                    let v = ols_covariance_time(&j, &build_covariance(model, g.n)?.dense())?;
                    e.with_covariance(v)
                }
                None => e,
            }
        }
        MethodArg::Gls => gls_time(&j, &m, &build_covariance(required(&nm)?, g.n)?)?,
        MethodArg::GlsSpectral => gls_spectral(&j, &m, required(&nm)?, cfg.pad_factor * g.n)?,
        MethodArg::Matched => {
            let model = required(&nm)?;
            let tpl = single_template(&j)?;
            let filt = build_matched_filter(&tpl, model, grid_len, 0.0, None, &j.labels()[0])?;
            let mut e = spectral_gls_1d(&tpl, &m, model, grid_len)?;
            e.x_star[0] = apply_filter(&filt, &m)?;
            e.method = Method::MatchedFilter;
            e
        }
    };
    let residual = (m.values() - j.signal(&est.x_star)).norm();
    let se = est.standard_errors();
    Ok(match cfg.format() {
        Format::Json => to_json(&json!({
            "method": method_name(est.method),
            "n_samples": g.n,
            "dt": g.dt,
            "labels": j.labels(),
            "x_star": cvec_json(est.x_star.as_slice()),
            "covariance": est.covariance.as_ref().map(cmat_json),
            "standard_errors": est.covariance.as_ref().map(|_| se.clone()),
            "residual_norm": residual,
            "condition": {
                "condition_number": est.condition.condition_number,
                "solve_path": serde_json::to_value(est.condition.solve_path).unwrap_or(Value::Null),
                "weighted_residual_norm": est.condition.residual_norm,
                "jitter": est.condition.jitter,
            },
            "timing_s": clock.elapsed().as_secs_f64(),
        })),
        Format::Csv => {
            let mut out = String::from("index,label,re,im,std_error\n");
            for (i, label) in j.labels().iter().enumerate() {
                let s = se.get(i).map(|&v| num(v)).unwrap_or_default();
                out.push_str(&format!("{i},{label},{},{},{s}\n", num(est.x_star[i].re), num(est.x_star[i].im)));
            }
            out
        }
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn simulate(cfg: &RunConfig) -> CliResult<String> {
    let g = grid(cfg)?;
    let basis = basis(cfg)?;
    let j = build_design_matrix_at(&basis, g.n, g.dt, g.origin)?;
    let x = x_true(cfg, j.n_params())?;
    let nm = noise(cfg, &g)?;
    let (spec, model) = nm.as_ref().ok_or_else(|| CliError::config("--noise is required"))?;
    let synth = NoiseSynthesizer::new(model, g.n)?;
    let m = j.signal(&x) + synth.draw(cfg.seed, 0);
    let d = Dataset { dt: g.dt, origin_index: g.origin, values: m.iter().copied().collect() };
    let side = json!({
        "x_true": cvec_json(x.as_slice()),
        "seed": cfg.seed,
        "noise": spec,
        "model": basis,
        "n_samples": g.n,
        "dt": g.dt,
        "origin_index": g.origin,
        "synthesis_path": format!("{:?}", synth.path()),
    });
    let out = cfg.out.as_deref().expect("validated");
    write_output(Some(&sidecar_path(out)), &to_json(&side))?;
    Ok(match cfg.format() {
        Format::Csv => format_dataset(&d),
        Format::Json => to_json(&json!({ "t": d.times().collect::<Vec<_>>(), "value": cvec_json(&d.values) })),
    })
}

fn compare(cfg: &RunConfig) -> CliResult<String> {
    let g = grid(cfg)?;
    let j = build_design_matrix_at(&basis(cfg)?, g.n, g.dt, g.origin)?;
    let x = x_true(cfg, j.n_params())?;
    let nm = noise(cfg, &g)?;
    let model = required(&nm)?;
    let mut methods = vec![Method::Ols, Method::GlsTime, Method::GlsSpectral];
    if j.n_params() == 1 {
        methods.push(Method::MatchedFilter);
    }
    let opts = SpectralOptions { grid_factor: cfg.grid_factor, pad_factor: cfg.pad_factor };
    let out = monte_carlo(&j, &x, model, &methods, cfg.trials, cfg.seed, opts)?;
    let (o, gl) = (&out[0], &out[1]);
    let tr: f64 = (0..j.n_params()).map(|i| o.predicted[(i, i)].re).sum();
    let loewner_pred = loewner_leq(&gl.predicted, &o.predicted, 1e-9 * tr)?;
    let loewner_emp = loewner_leq(&gl.empirical, &o.empirical, 0.0)?;
    Ok(match cfg.format() {
        Format::Json => to_json(&json!({
            "trials": cfg.trials,
            "seed": cfg.seed,
            "labels": j.labels(),
            "methods": out.iter().map(|s| json!({
                "method": method_name(s.method),
                "bias": cvec_json(s.bias.as_slice()),
                "empirical": cmat_json(&s.empirical),
                "predicted": cmat_json(&s.predicted),
                "reported": cmat_json(&s.reported),
            })).collect::<Vec<_>>(),
            "loewner_gls_le_ols": { "predicted": loewner_pred, "empirical": loewner_emp },
        })),
        Format::Csv => {
            let mut t = String::from(
                "method,row,col,bias_re,bias_im,empirical_re,empirical_im,predicted_re,predicted_im,\
                 reported_re,reported_im,loewner_predicted,loewner_empirical\n",
            );
            for s in &out {
                let name = method_name(s.method);
                let name = name.as_str().unwrap_or_default();
                for r in 0..j.n_params() {
                    for c in 0..j.n_params() {
                        let bias = if r == c { format!("{},{}", num(s.bias[r].re), num(s.bias[r].im)) } else { ",".into() };
                        let (e, p, q) = (s.empirical[(r, c)], s.predicted[(r, c)], s.reported[(r, c)]);
                        t.push_str(&format!(
                            "{name},{r},{c},{bias},{},{},{},{},{},{},{loewner_pred},{loewner_emp}\n",
                            num(e.re),
                            num(e.im),
                            num(p.re),
                            num(p.im),
                            num(q.re),
                            num(q.im)
                        ));
                    }
                }
            }
            t
        }
    })
}

fn mismatch(cfg: &RunConfig) -> CliResult<String> {
    let g = grid(cfg)?;
    let j = build_design_matrix_at(&basis(cfg)?, g.n, g.dt, g.origin)?;
    let tpl = single_template(&j)?;
    let nm = noise(cfg, &g)?;
    let model = required(&nm)?;
    let w: Perturbation = json_arg(cfg.perturbation.as_deref().unwrap_or_default(), "perturbation")?;
    let eps = parse_real_list(&cfg.epsilons, "epsilons")?;
    let scan = mismatch_scan(&tpl, model, &w, &eps, cfg.grid_factor * g.n)?;
    Ok(match cfg.format() {
        Format::Json => to_json(&json!({
            "template": j.labels()[0],
            "perturbation": w,
            "rows": scan.rows,
            "slope": scan.slope,
        })),
        Format::Csv => {
            let slope = scan.slope.map(num).unwrap_or_default();
            let mut t = String::from("epsilon,v_used,v_true,v_exact,measured_rel_excess,predicted_rel_excess,slope\n");
            for r in &scan.rows {
                t.push_str(&format!(
                    "{},{},{},{},{},{},{slope}\n",
                    num(r.epsilon),
                    num(r.v_used),
                    num(r.v_true),
                    num(r.v_exact),
                    num(r.measured_rel_excess),
                    num(r.predicted_rel_excess)
                ));
            }
            t
        }
    })
}
