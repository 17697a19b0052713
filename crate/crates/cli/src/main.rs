//! `novelty`: run pipeline commands against a TOML config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use novelty_core::ingest::verify_embedding_file;
use novelty_core::pipeline::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "novelty", version, about = "Daily text novelty and its response to media exposure")]
struct Cli {
    /// Run configuration.
    #[arg(long, short, global = true, default_value = "config.toml")]
    config: PathBuf,

    /// Override a config key, e.g. `--set regression.hac_bandwidth=14`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory (overrides `output_dir`); relative to the working directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the shuffled placebo (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the config, input files and embedding file.
    Validate,
    /// Daily novelty series for each configured metric.
    Novelty,
    /// Lag-order grid and leads row for the primary exposure.
    MainTable,
    /// Leads placebo for each outcome.
    Leads,
    /// Placebo exposures and the shuffled-exposure placebo.
    Falsify,
    /// Primary and alternative exposures under the main specification.
    Exposures,
    /// Local-projection responses, windows and the pre-trend test.
    Irf,
    /// Sample, gating and stationarity diagnostics.
    Diagnostics,
    /// Every stage; nothing is written unless all succeed.
    All,
    /// Check an embedding file against its posts file.
    VerifyEmbeddings {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        posts: PathBuf,
    },
}

impl Cmd {
    fn pipeline(&self) -> Option<Command> {
        Some(match self {
            Cmd::Validate => Command::Validate,
            Cmd::Novelty => Command::Novelty,
            Cmd::MainTable => Command::MainTable,
            Cmd::Leads => Command::Leads,
            Cmd::Falsify => Command::Falsify,
            Cmd::Exposures => Command::Exposures,
            Cmd::Irf => Command::Irf,
            Cmd::Diagnostics => Command::Diagnostics,
            Cmd::All => Command::All,
            Cmd::VerifyEmbeddings { .. } => return None,
        })
    }
}

fn overrides(cli: &Cli) -> std::io::Result<Vec<String>> {
    let mut out = cli.overrides.clone();
    if let Some(dir) = &cli.out {
        let abs = std::env::current_dir()?.join(dir);
        let quoted = toml::Value::String(abs.to_string_lossy().into_owned());
        out.push(format!("output_dir={quoted}"));
    }
    if let Some(seed) = cli.seed {
        out.push(format!("seed={seed}"));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();

    if let Cmd::VerifyEmbeddings { embeddings, posts } = &cli.command {
        return match verify_embedding_file(embeddings, posts) {
            Ok(report) => {
                println!("{report}");
                if report.is_ok() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }

    let command = cli.command.pipeline().expect("pipeline command");
    let result = overrides(&cli)
        .map_err(|e| e.to_string())
        .and_then(|o| RunConfig::load(&cli.config, &o).map_err(|e| e.to_string()))
        .and_then(|cfg| run(&cfg, command).map_err(|e| e.to_string()));
    match result {
        Ok(bundle) => {
            println!(
                "{command}: {} files in {} (provenance {})",
                bundle.files.len(),
                bundle.output_dir.display(),
                &bundle.provenance.hash[..12]
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
