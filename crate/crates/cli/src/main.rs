mod commands;
mod config;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use report::Report;

/// Pseudospherical families of third-order evolution equations: catalog,
/// structure verification, immersion triples and surface reconstruction.
#[derive(Parser)]
#[command(name = "pss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CatalogAction {
    List,
    Validate,
}

#[derive(Subcommand)]
enum Command {
    /// List branches and presets, or validate a spec.
    Catalog {
        #[arg(value_enum, default_value = "list")]
        action: CatalogAction,
        #[command(flatten)]
        opts: RunConfig,
    },
    /// Check the structure equations and the classification conditions on random jets.
    Verify {
        #[command(flatten)]
        opts: RunConfig,
    },
    /// Solve for the second fundamental form triple and export it as CSV.
    Sff {
        #[command(flatten)]
        opts: RunConfig,
    },
    /// Cross-check a triple against its family (Gauss and Codazzi).
    Codazzi {
        #[command(flatten)]
        opts: RunConfig,
    },
    /// March the equation on a grid and export the field.
    Pde {
        #[command(flatten)]
        opts: RunConfig,
    },
    /// Integrate the frame over a solution and export a mesh.
    Reconstruct {
        #[command(flatten)]
        opts: RunConfig,
    },
}

fn set_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("PSS_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("PSS_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("PSS_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = set_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let validate = matches!(cli.command, Command::Catalog { action: CatalogAction::Validate, .. });
    let (name, flags) = match cli.command {
        Command::Catalog { opts, .. } => ("catalog", opts),
        Command::Verify { opts } => ("verify", opts),
        Command::Sff { opts } => ("sff", opts),
        Command::Codazzi { opts } => ("codazzi", opts),
        Command::Pde { opts } => ("pde", opts),
        Command::Reconstruct { opts } => ("reconstruct", opts),
    };
    let cfg = match RunConfig::resolve(flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match name {
        "catalog" => commands::catalog(&cfg, validate),
        "verify" => commands::verify_cmd(&cfg),
        "sff" => commands::sff(&cfg),
        "codazzi" => commands::codazzi(&cfg),
        "pde" => commands::pde(&cfg),
        _ => commands::reconstruct(&cfg),
    };
    let (status, result) = match outcome {
        Ok(r) => r,
        Err(commands::Failure(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let text = Report::new(name, &cfg, status, result, started).to_json();
    let written = match &cfg.report {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(status.exit_code())
}
