//! `fbbm-lab`: command-line driver for the fractional BBM laboratory.

use std::path::PathBuf;

use anyhow::bail;
use clap::{Parser, Subcommand};

use fbbm_lab::experiments::{
    CancellationArgs, EnergyReportArgs, IdentityArgs, LifespanArgs, RateSweepArgs, SimulateArgs,
    SymbolArgs,
};
use fbbm_lab::{config, execute, output, LabCommand};

#[derive(Parser)]
#[command(
    name = "fbbm-lab",
    about = "Pseudospectral laboratory for the fractional BBM equation",
    version
)]
struct Cli {
    /// Seed for every random draw in the experiment
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for result files
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Cap the worker pool (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Run the experiment described by a key-value configuration file
    /// instead of a subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and record norms, energy and the invariant
    Simulate(SimulateArgs),
    /// Fit the modified (quartic) and standard (cubic) energy-rate exponents
    SweepEnergyRate(RateSweepArgs),
    /// Measure first-crossing times against the 1/eps^2 lifespan scale
    SweepLifespan(LifespanArgs),
    /// Sample the symbol's growth envelopes and functional relation
    VerifySymbol(SymbolArgs),
    /// Check that the quadratic terms cancel in the transformed equation
    VerifyCancellation(CancellationArgs),
    /// Evaluate the quartic forms and their exact identities
    VerifyIdentities(IdentityArgs),
    /// Tabulate the per-k energy breakdown for one state
    EnergyReport(EnergyReportArgs),
}

impl From<Command> for LabCommand {
    fn from(cmd: Command) -> Self {
        match cmd {
            Command::Simulate(a) => LabCommand::Simulate(a),
            Command::SweepEnergyRate(a) => LabCommand::SweepEnergyRate(a),
            Command::SweepLifespan(a) => LabCommand::SweepLifespan(a),
            Command::VerifySymbol(a) => LabCommand::VerifySymbol(a),
            Command::VerifyCancellation(a) => LabCommand::VerifyCancellation(a),
            Command::VerifyIdentities(a) => LabCommand::VerifyIdentities(a),
            Command::EnergyReport(a) => LabCommand::EnergyReport(a),
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        fbbm_core::exec::configure_threads(cli.threads);
    }

    let (command, seed, out_dir) = match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
            let plan = config::parse(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            (
                plan.command,
                plan.seed.unwrap_or(cli.seed),
                plan.out_dir.unwrap_or(cli.out_dir),
            )
        }
        (None, Some(cmd)) => (cmd.into(), cli.seed, cli.out_dir),
        (Some(_), Some(_)) => bail!("pass either --config or a subcommand, not both"),
        (None, None) => bail!("nothing to do: pass a subcommand or --config (see --help)"),
    };

    let manifest = execute(&command, &out_dir, seed)?;
    output::announce(&manifest, &out_dir);
    Ok(())
}
