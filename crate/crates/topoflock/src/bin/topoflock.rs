//! Experiment runner CLI.
//!
//! Exit codes: 0 ok, 2 config error, 3 failed runtime checks under
//! --strict, 4 runtime abort (vacuum formation or unresolvable stiffness).

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use topoflock::config::{self, parse_config, parse_config_text};
use topoflock::runner::{run_experiment, RunError};

#[derive(Parser, Debug)]
#[command(name = "topoflock", version, about = "Alignment-dynamics laboratory with short-range topological kernels")]
struct Cli {
    /// Path to a key = value config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Name of a shipped preset (see --list-presets).
    #[arg(long)]
    preset: Option<String>,

    /// List the shipped presets and exit.
    #[arg(long)]
    list_presets: bool,

    /// Exit nonzero when any runtime check fails.
    #[arg(long)]
    strict: bool,

    /// Dump the operator fields of the initial state to operators.csv.
    #[arg(long)]
    dump_operators: bool,

    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed (overrides the config's `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for (name, _) in config::PRESETS {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let parsed = match (&cli.config, &cli.preset) {
        (Some(path), None) => parse_config(path),
        (None, Some(name)) => match config::preset(name) {
            Some(text) => parse_config_text(text),
            None => {
                eprintln!("unknown preset `{name}`; try --list-presets");
                return ExitCode::from(2);
            }
        },
        _ => {
            eprintln!("exactly one of --config or --preset is required");
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parsed {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.strict = cli.strict;
    cfg.dump_operators = cli.dump_operators;

    match run_experiment(&cfg) {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "check {} = {} ({})",
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            for (label, ok, term) in &report.children {
                println!(
                    "child {label} = {} ({})",
                    if *ok { "PASS" } else { "FAIL" },
                    term.label()
                );
            }
            println!("termination = {}", report.termination.label());
            println!("artifacts in {}", report.out_dir.display());
            if report.runtime_abort() {
                ExitCode::from(4)
            } else if cli.strict && !report.all_checks_pass() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(4)
        }
    }
}
