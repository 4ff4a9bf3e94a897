use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use depca_cli::{parse_config, run, Mode, RunOptions, EXIT_ERROR};

/// Solve and verify x'(t) = Ax(t) + Bx([t]) + f(t) from a TOML description.
#[derive(Debug, Parser)]
#[command(name = "depca", version)]
struct Args {
    /// System description file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured mode: solve, verify, reduce, dichotomy or scan.
    #[arg(long)]
    mode: Option<Mode>,
    /// Directory for the CSV and report; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides solve.tol.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomized probes.
    #[arg(long, default_value_t = depca::diagnostics::DEFAULT_SEED)]
    seed: u64,
    /// Do not print the report.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn execute(args: &Args) -> Result<i32, String> {
    let mut config = parse_config(&args.config).map_err(|e| e.to_string())?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(tol) = args.tol {
        config.solve.tol = tol;
    }
    if args.mode.is_some() || args.tol.is_some() {
        config.validate().map_err(|v| depca_cli::ConfigError::Validation(v).to_string())?;
    }
    let artifacts = run(&config, &RunOptions { seed: args.seed }).map_err(|e| e.to_string())?;

    let dir = match (&args.out, config.output_dir()) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => resolve(&args.config, d),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let text = artifacts.report.render();
    write(&dir.join(config.report_name()), &text)?;
    if let Some(csv) = &artifacts.csv {
        write(&dir.join(config.csv_name()), csv)?;
    }
    if !args.quiet {
        print!("{text}");
    }
    Ok(artifacts.exit_code())
}

/// Relative output directories are taken relative to the config file.
fn resolve(config: &Path, dir: &str) -> PathBuf {
    let d = Path::new(dir);
    if d.is_absolute() {
        d.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(d)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
