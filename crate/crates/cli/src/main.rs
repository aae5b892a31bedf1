use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use instance_space::pipeline::{run_and_write, validate_bundle, RunConfig};
use instance_space::server::{serve_bundle, DEFAULT_PORT};

#[derive(Parser)]
#[command(
    name = "isa",
    version,
    about = "Instance space analysis for a labeled classification dataset"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis and write a bundle.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Serve a bundle (and optionally the explorer build) over local HTTP.
    Serve {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the explorer's static files, served under /app/.
        #[arg(long)]
        app_dir: Option<PathBuf>,
    },
    /// Check that a directory holds a complete, consistent bundle.
    Validate {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let bundle = run_and_write(&cfg)?;
            println!(
                "wrote bundle for {} instances to {}",
                bundle.n_instances(),
                cfg.output_dir.display()
            );
        }
        Command::Serve {
            dir,
            port,
            host,
            app_dir,
        } => {
            let server = serve_bundle(&dir, &host, port, app_dir)
                .with_context(|| format!("serving {}", dir.display()))?;
            println!("serving {} at http://{}/app/", dir.display(), server.addr());
            server.join();
        }
        Command::Validate { dir } => {
            let summary = validate_bundle(&dir)?;
            println!(
                "{}: valid bundle, {} instances, {} algorithms, {} footprints",
                dir.display(),
                summary.n_instances,
                summary.algorithms.len(),
                summary.footprint_owners.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
