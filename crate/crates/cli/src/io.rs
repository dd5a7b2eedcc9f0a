//! Dataset and spec file formats.

use crate::error::{CliError, CliResult};
use colored_lsq::{CVector, Complex};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use std::path::Path;

/// Reads a file, or takes `arg` itself when it looks like inline JSON.
pub fn json_arg<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_string()
    } else {
        read_file(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{what}: {e}")))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input("FileError", format!("cannot read {}: {e}", path.display())))
}

pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::input("FileError", format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `1.5`, `-2e-3`, `1+2j`, `0.5-1e-3j` or `3j`.
pub fn parse_complex(s: &str) -> Option<Complex<f64>> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then(|| Complex::new(x, 0.0));
    }
    let body = s.strip_suffix('j').or_else(|| s.strip_suffix('i'))?;
    let bytes = body.as_bytes();
    // split at the last sign that is not leading and not an exponent sign
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (body[..i].parse::<f64>().ok()?, body[i..].parse::<f64>().ok()?),
        None => (0.0, body.parse::<f64>().ok()?),
    };
    (re.is_finite() && im.is_finite()).then(|| Complex::new(re, im))
}

/// Shortest round-trip form, in exponent notation when very large or small.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn format_complex(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        num(z.re)
    } else if z.im < 0.0 {
        format!("{}{}j", num(z.re), num(z.im))
    } else {
        format!("{}+{}j", num(z.re), num(z.im))
    }
}

/// Comma-separated list of real or complex values.
pub fn parse_complex_list(s: &str, what: &str) -> CliResult<Vec<Complex<f64>>> {
    s.split(',')
        .map(|v| parse_complex(v).ok_or_else(|| CliError::parse(format!("{what}: cannot read '{}'", v.trim()))))
        .collect()
}

pub fn parse_real_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(format!("{what}: cannot read '{}'", v.trim())))
        })
        .collect()
}

/// A uniformly sampled record read from a `t,value` CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dt: f64,
    /// Index of the first sample on the `k dt` lattice.
    pub origin_index: i64,
    pub values: Vec<Complex<f64>>,
}

impl Dataset {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| (self.origin_index + i as i64) as f64 * self.dt)
    }

    pub fn vector(&self) -> CVector<f64> {
        CVector::from_column_slice(&self.values)
    }
}

/// Parses a dataset. Times must be uniformly spaced and lie on the lattice
/// `k dt`, since basis functions are evaluated there.
pub fn parse_dataset(text: &str) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::parse(format!("line 1: {e}")))?;
    if header.len() != 2 || !header[0].eq_ignore_ascii_case("t") || !header[1].eq_ignore_ascii_case("value") {
        let found = header.iter().collect::<Vec<_>>().join(",");
        return Err(CliError::parse(format!("line 1: expected header 't,value', found '{found}'")));
    }
    let mut t = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::parse(format!("line {line}: {e}"))
        })?;
        let lineno = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(CliError::parse(format!("line {lineno}: expected 2 fields, found {}", rec.len())));
        }
        let ti = rec[0]
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::parse(format!("line {lineno}: bad time '{}'", &rec[0])))?;
        let v = parse_complex(&rec[1])
            .ok_or_else(|| CliError::parse(format!("line {lineno}: bad value '{}'", &rec[1])))?;
        t.push((lineno, ti));
        values.push(v);
    }
    if t.len() < 2 {
        return Err(CliError::parse("data file needs at least two samples"));
    }
    let dt = t[1].1 - t[0].1;
    if !(dt > 0.0) {
        return Err(CliError::parse(format!("line {}: times must increase", t[1].0)));
    }
    for w in t.windows(2) {
        let step = w[1].1 - w[0].1;
        if (step - dt).abs() > 1e-6 * dt {
            return Err(CliError::parse(format!("line {}: sampling is not uniform", w[1].0)));
        }
    }
    let k0 = t[0].1 / dt;
    let origin_index = k0.round() as i64;
    if (k0 - origin_index as f64).abs() > 1e-6 {
        return Err(CliError::parse(format!(
            "line {}: first time {} is not a multiple of the step {dt}",
            t[0].0, t[0].1
        )));
    }
    Ok(Dataset { dt, origin_index, values })
}

pub fn format_dataset(d: &Dataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = vec![["t".to_string(), "value".to_string()]];
    rows.extend(d.times().zip(&d.values).map(|(t, v)| [num(t), format_complex(*v)]));
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

pub fn cvec_json(v: &[Complex<f64>]) -> Value {
    json!({
        "re": v.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": v.iter().map(|z| z.im).collect::<Vec<_>>(),
    })
}

pub fn cmat_json(m: &colored_lsq::CMatrix<f64>) -> Value {
    let part = |f: fn(&Complex<f64>) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
    };
    json!({ "re": part(|z| z.re), "im": part(|z| z.im) })
}
