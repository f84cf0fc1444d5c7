//! Command-line front end: `run`, `validate` and `schema`.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
//! Errors are reported on stderr as a single JSON object.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gasrelax::config::{parse_config, RunConfig, SCHEMA_TEXT};
use gasrelax::runner::{resolve_output_dir, run, OUTPUT_DIR_ENV};
use gasrelax::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gasrelax", version, about = "Run gas-relaxation experiments from a TOML configuration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config file and the environment).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker-thread count (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the annotated configuration schema.
    Schema,
}

fn load(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(vec![gasrelax::config::FieldError {
            field: "config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        }])
    })?;
    parse_config(&text)
}

fn report(e: &Error) -> ExitCode {
    let fields = match e {
        Error::Config(errs) => json!(errs),
        _ => json!([]),
    };
    let kind = if e.exit_code() == 2 { "invalid-config" } else { "runtime" };
    eprintln!("{}", json!({ "error": kind, "message": e.to_string(), "fields": fields }));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Schema => {
            print!("{SCHEMA_TEXT}");
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}", json!({ "valid": true, "experiment": cfg.kind.name() }));
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
        Command::Run {
            config,
            output_dir,
            seed,
            workers,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => return report(&e),
            };
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(w) = workers {
                cfg.set_workers(w);
            }
            let dir = resolve_output_dir(output_dir, &cfg);
            match run(&cfg, &dir) {
                Ok(m) => {
                    println!(
                        "{}",
                        json!({
                            "output_dir": dir,
                            "files": m.outputs.iter().map(|o| &o.file).collect::<Vec<_>>(),
                            "wall_clock_seconds": m.wall_clock_seconds,
                            "default_output_env": OUTPUT_DIR_ENV,
                        })
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => report(&e),
            }
        }
    }
}
