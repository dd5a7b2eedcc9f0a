use crate::error::{CliError, CliResult};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Fit,
    Simulate,
    Compare,
    MismatchScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ols,
    Gls,
    GlsSpectral,
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Fit linear models to uniformly sampled data under stationary colored noise.
#[derive(Debug, Clone, Parser)]
#[command(name = "clsq", version)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Dataset CSV with header `t,value`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Basis list as JSON, inline or a file path,
    /// e.g. `[{"type":"constant"},{"type":"polynomial","degree":1}]`.
    #[arg(long)]
    pub model: Option<String>,
    /// Noise spec as JSON, a file path or inline.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long, value_enum, default_value = "gls")]
    pub method: MethodArg,
    /// Frequency grid size as a multiple of N.
    #[arg(long, default_value_t = 8)]
    pub grid_factor: usize,
    /// Deconvolution padding as a multiple of N.
    #[arg(long, default_value_t = 4)]
    pub pad_factor: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to csv for simulate and compare, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// True parameters for simulate and compare, comma separated (`1.5,2-0.5j`).
    #[arg(long, allow_hyphen_values = true)]
    pub x_true: Option<String>,
    /// Number of samples when no dataset is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sampling step when no dataset is given.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// PSD perturbation for mismatch-scan as JSON, e.g. `{"type":"cosine","cycles":3}`.
    #[arg(long)]
    pub perturbation: Option<String>,
    /// Comma-separated epsilon values for mismatch-scan.
    #[arg(long, default_value = "0.1,0.03,0.01,0.003,0.001")]
    pub epsilons: String,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.trials < 1 {
            return Err(CliError::config("trials must be at least 1"));
        }
        if self.command == Command::Compare && self.trials < 100 {
            return Err(CliError::config(format!("compare needs at least 100 trials, got {}", self.trials)));
        }
        if self.grid_factor < 2 {
            return Err(CliError::config(format!("grid factor must be at least 2, got {}", self.grid_factor)));
        }
        if self.pad_factor < 1 {
            return Err(CliError::config("pad factor must be at least 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CliError::config(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(d) = &self.data {
            if !d.is_file() {
                return Err(CliError::input("FileError", format!("data file {} does not exist", d.display())));
            }
        }
        if self.model.is_none() {
            return Err(CliError::config("--model is required"));
        }
        let needs_noise = match self.command {
            Command::Fit => self.method != MethodArg::Ols,
            _ => true,
        };
        if needs_noise && self.noise.is_none() {
            return Err(CliError::config("--noise is required for this command and method"));
        }
        match self.command {
            Command::Fit if self.data.is_none() => Err(CliError::config("fit needs --data")),
            Command::Simulate if self.out.is_none() => Err(CliError::config("simulate needs --out")),
            Command::Simulate if self.x_true.is_none() => Err(CliError::config("simulate needs --x-true")),
            Command::Simulate | Command::Compare | Command::MismatchScan if self.data.is_none() && self.n.is_none() => {
                Err(CliError::config("give --n or --data to fix the record length"))
            }
            Command::MismatchScan if self.perturbation.is_none() => {
                Err(CliError::config("mismatch-scan needs --perturbation"))
            }
            _ => Ok(()),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Simulate | Command::Compare => Format::Csv,
            Command::Fit | Command::MismatchScan => Format::Json,
        })
    }
}
