use clap::Parser;
use colored_lsq_cli::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    if let Err(e) = run(&cfg) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
