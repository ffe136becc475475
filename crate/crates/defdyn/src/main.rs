//! Thin CLI over the `defdyn` library: one subcommand per run mode plus
//! report recomputation. Errors leave as JSON on stderr with exit code 2
//! (configuration) or 3 (infeasibility).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use defdyn::run::{
    cmd_control, cmd_control_sampled, cmd_metrics, cmd_simulate, RunConfig, RunOutput,
};
use defdyn::Error;

#[derive(Parser)]
#[command(
    name = "defdyn",
    version,
    about = "Simulate and control defense dynamics on attack-defense graphs"
)]
struct Cli {
    /// Bound the rayon worker count; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Free-running dynamics with fixed parameters.
    Simulate(RunArgs),
    /// Event-switched control on the exact probability state.
    Control(RunArgs),
    /// Event-switched control driven by sample-state estimates.
    ControlSampled(RunArgs),
    /// Recompute report.json from a stored run directory.
    Metrics {
        /// Run directory holding config.json and the CSV artifacts.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut config = RunConfig::from_file(&args.config)?;
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn dispatch(command: &Command) -> Result<RunOutput, Error> {
    match command {
        Command::Simulate(args) => cmd_simulate(&load(args)?),
        Command::Control(args) => cmd_control(&load(args)?),
        Command::ControlSampled(args) => cmd_control_sampled(&load(args)?),
        Command::Metrics { out } => cmd_metrics(out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || match dispatch(&cli.command) {
        Ok(output) => {
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&output.report).expect("report serializes")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            let payload = serde_json::json!({
                "kind": err.kind(),
                "error": err.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code() as u8)
        }
    };
    match cli.threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run),
        _ => run(),
    }
}
