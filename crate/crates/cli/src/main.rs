//! `qkm` — command-line front end for the spectral-curve solver and the
//! closed-form correlator evaluators in `qkm-core`.
//!
//! Exit codes: 0 success, 2 convergence failure, 3 invalid input,
//! 4 verification failure.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{CmdResult, Failure};
use config::{OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "qkm", about = "Quartic matrix-model spectral curve toolkit", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to a flat dotted-key config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent (overrides output.path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: json or csv (overrides output.format).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the spectral system for (eps, rho) at the configured coupling.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate correlators at points from a CSV file (re,im,re,im per line).
    Correlator {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        points: PathBuf,
        /// pair, diag, or oneone.
        #[arg(long, default_value = "pair")]
        mode: String,
    },
    /// Run the full residual-identity suite against the solved model.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare closed-form coupling-series jets against the independent oracle.
    Series {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve across a coupling grid a:b:step and emit one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "lambda-grid")]
        lambda_grid: String,
    },
    /// Run a built-in consistency battery on a fixed small model.
    Selftest,
}

fn main() {
    if let Ok(threads) = std::env::var("QKM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        } else {
            eprintln!("error: QKM_THREADS must be a positive integer");
            std::process::exit(3);
        }
    }
    let cli = Cli::parse();
    let code = dispatch(cli.cmd);
    std::process::exit(code);
}

fn load(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let raw = config::parse_file(&common.config)
        .map_err(|e| Failure { code: 3, message: format!("{e:#}") })?;
    let mut cfg = raw.resolve().map_err(|e| Failure { code: 3, message: format!("{e:#}") })?;
    if let Some(fmt) = &common.format {
        cfg.format = match fmt.as_str() {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            other => {
                return Err(Failure {
                    code: 3,
                    message: format!("--format must be json or csv, got {other}"),
                })
            }
        };
    }
    if let Some(out) = &common.out {
        cfg.out_path = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn run(common: &CommonArgs, f: impl FnOnce(&RunConfig) -> CmdResult) -> i32 {
    let cfg = match load(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    match f(&cfg) {
        Ok((text, code)) => emit(&cfg.out_path, &text, code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(out_path: &Option<String>, text: &str, code: i32) -> i32 {
    match out_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {path}: {e}");
                return 3;
            }
            code
        }
        None => {
            print!("{text}");
            code
        }
    }
}

fn dispatch(cmd: Cmd) -> i32 {
    match cmd {
        Cmd::Solve { common } => run(&common, commands::cmd_solve),
        Cmd::Correlator { common, points, mode } => {
            run(&common, |cfg| commands::cmd_correlator(cfg, &points, &mode))
        }
        Cmd::Verify { common } => run(&common, commands::cmd_verify),
        Cmd::Series { common } => run(&common, commands::cmd_series),
        Cmd::Sweep { common, lambda_grid } => {
            run(&common, |cfg| commands::cmd_sweep(cfg, &lambda_grid))
        }
        Cmd::Selftest => match commands::cmd_selftest() {
            Ok((text, code)) => emit(&None, &text, code),
            Err(e) => {
                eprintln!("error: {}", e.message);
                e.code
            }
        },
    }
}
