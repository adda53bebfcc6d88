use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ierk::harness::{run, Experiment, ExperimentConfig};
use ierk::IerkError;

#[derive(Parser)]
#[command(
    name = "ierk",
    version,
    about = "IMEX Runge-Kutta verification, certification and energy studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check order conditions
    Verify(RunArgs),
    /// Certify energy decay through the differentiation matrices
    Certify(RunArgs),
    /// Scan one free parameter for the certified region
    Scan(RunArgs),
    /// Average dissipation rates of all registry methods
    RateTable(RunArgs),
    /// Temporal convergence study on the manufactured solution
    Converge(RunArgs),
    /// Energy evolution of the coarsening problem
    Evolve(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tableau JSON file used instead of a registry method
    #[arg(long)]
    tableau: Option<PathBuf>,
    /// Method id followed by `--key value` overrides, e.g. `IERK2-1 --c2 1 --a33 1/2`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

fn build_config(experiment: Experiment, args: &RunArgs) -> ierk::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let cfg = ExperimentConfig::from_file(p)?;
            if cfg.experiment != experiment {
                return Err(IerkError::Config(format!(
                    "config is for `{:?}`, not `{:?}`",
                    cfg.experiment, experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(experiment),
    };
    if let Some(t) = &args.tableau {
        cfg.method.tableau_file = Some(t.clone());
    }
    let mut rest = args.rest.iter().peekable();
    while let Some(tok) = rest.next() {
        let Some(key) = tok.strip_prefix("--") else {
            cfg.method.id = Some(tok.clone());
            continue;
        };
        if let Some((k, v)) = key.split_once('=') {
            cfg.apply_override(k, v)?;
            continue;
        }
        match rest.next_if(|next| !next.starts_with("--")) {
            Some(v) => cfg.apply_override(key, v)?,
            None if key == "record-stages" => cfg.apply_override(key, "true")?,
            None => return Err(IerkError::Config(format!("`--{key}` needs a value"))),
        }
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn fail(code: u8, e: &IerkError) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": e.to_string(), "input_error": e.is_input_error() })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Verify(a) => (Experiment::Verify, a),
        Command::Certify(a) => (Experiment::Certify, a),
        Command::Scan(a) => (Experiment::Scan, a),
        Command::RateTable(a) => (Experiment::RateTable, a),
        Command::Converge(a) => (Experiment::Converge, a),
        Command::Evolve(a) => (Experiment::Evolve, a),
    };
    let cfg = match build_config(experiment, args) {
        Ok(c) => c,
        Err(e) => return fail(2, &e),
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(if e.is_input_error() { 2 } else { 1 }, &e),
    };
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = report.write_to(&out) {
        return fail(1, &e);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report.summary).unwrap_or_default()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
