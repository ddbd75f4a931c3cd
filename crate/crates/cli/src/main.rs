use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::{Artifacts, Context};

#[derive(Debug, Parser)]
#[command(name = "wellmirror", version, about = "Atoms in a box with evanescent-wave mirror walls")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output.dir`).
    #[arg(long, global = true, env = "WELLMIRROR_OUT")]
    out: Option<PathBuf>,
    /// Seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy levels over the configured mode range.
    Levels,
    /// Momentum density marginals and total probability.
    Pdf,
    /// Momentum samples from the configured eigenmode.
    Sample,
    /// Mirror potential profile and classical bounces.
    Bounce,
    /// Phase shift for the configured momenta.
    Phase,
    /// Phase series under the configured theory.
    Simulate,
    /// Hypothesis tests and verdict.
    Discriminate {
        /// Test a recorded phase series instead of simulating one.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Pilot-wave trajectories from the configured start points.
    Trajectory,
}

fn run(cli: Cli) -> Result<(), wellmirror::Error> {
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists; the default pool is then used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let ctx = Context::load(cli.config.as_deref(), cli.seed)?;
    let out = cli
        .out
        .or_else(|| ctx.config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let artifacts: Artifacts = match &cli.command {
        Command::Levels => commands::levels(&ctx)?,
        Command::Pdf => commands::pdf(&ctx)?,
        Command::Sample => commands::sample(&ctx)?,
        Command::Bounce => commands::bounce(&ctx)?,
        Command::Phase => commands::phase(&ctx)?,
        Command::Simulate => commands::simulate(&ctx)?,
        Command::Discriminate { series } => commands::discriminate(&ctx, series.as_deref())?,
        Command::Trajectory => commands::trajectory(&ctx)?,
    };
    for (name, contents) in &artifacts.files {
        wellmirror::io::write_file(&out.join(name), contents)?;
    }
    wellmirror::io::write_file(&out.join("config_echo.toml"), &ctx.echo)?;
    print!("{}", artifacts.summary);
    println!("wrote {} file(s) to {}", artifacts.files.len() + 1, out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
