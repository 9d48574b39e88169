mod cache;
mod config;
mod experiments;
mod manifest;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::manifest::{sha256_hex, unix_now, write_artifact, Manifest, MANIFEST_FILE};

#[derive(Parser)]
#[command(name = "gibc", version, about = "Boundary spectra, random impedances and dissipative acoustic pencils")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts and manifest.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's `output_dir`, else `runs/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "GIBC_WORKERS")]
        workers: Option<usize>,
        /// Replaces the config's global seed.
        #[arg(long)]
        seed: Option<u64>,
        /// `dotted.path=value`, applied before validation; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Long-format `series,x,y` table of one artifact.
    EmitPlot {
        manifest: PathBuf,
        artifact: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load_checked(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, u8> {
    let cfg = config::load(path, overrides).map_err(|e| {
        eprintln!("config error: {e:#}");
        EXIT_CONFIG
    })?;
    let errs = config::validate(&cfg);
    if !errs.is_empty() {
        for e in &errs {
            eprintln!("config error: {e}");
        }
        return Err(EXIT_CONFIG);
    }
    Ok(cfg)
}

fn run(cfg: ExperimentConfig, out: Option<PathBuf>, workers: usize) -> Result<bool> {
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let config_json = serde_json::to_value(&cfg)?;
    let started_unix = unix_now();
    let outcome = experiments::run(&cfg, &out)?;
    let artifacts = outcome
        .outputs
        .iter()
        .map(|o| write_artifact(&out, o.id, o.kind, o.file, &o.contents))
        .collect::<Result<Vec<_>>>()?;
    let passed = outcome.assertions.iter().all(|a| a.passed);
    for a in &outcome.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    let manifest = Manifest {
        experiment: cfg.experiment.name().to_string(),
        config_sha256: sha256_hex(serde_json::to_string(&config_json)?.as_bytes()),
        config: config_json,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        workers,
        started_unix,
        finished_unix: unix_now(),
        artifacts,
        assertions: outcome.assertions,
        passed,
    };
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("manifest: {}", path.display());
    Ok(passed)
}

fn emit_plot(manifest: &Path, artifact: &str, out: Option<PathBuf>) -> Result<()> {
    let m = Manifest::read(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let table = plot::emit(&m, dir, artifact)?;
    match out {
        Some(p) => std::fs::write(&p, table).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config, overrides } => match load_checked(&config, &overrides) {
            Ok(cfg) => {
                println!("ok: {} (schema_version {})", cfg.experiment.name(), cfg.schema_version);
                ExitCode::SUCCESS
            }
            Err(code) => ExitCode::from(code),
        },
        Command::Run { config, out, workers, seed, overrides } => {
            let mut cfg = match load_checked(&config, &overrides) {
                Ok(cfg) => cfg,
                Err(code) => return ExitCode::from(code),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
                .max(1);
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
                eprintln!("warning: {e}");
            }
            match run(cfg, out, workers) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_ASSERTION),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
        Command::EmitPlot { manifest, artifact, out } => match emit_plot(&manifest, &artifact, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_RUNTIME)
            }
        },
    }
}
