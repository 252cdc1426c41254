use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use daqs::protocol::{run_experiment, ExperimentConfig, Subcommand};

/// Digital-analog simulation of trapped-ion spin models.
#[derive(Parser)]
#[command(version)]
enum Cli {
    /// Spin-spin coupling matrix and its power-law fit.
    Couplings(Common),
    /// Equilibrium positions, transverse modes and Lamb-Dicke parameters.
    Modes(Common),
    /// Spin-phonon simulation of the XX and XY analog blocks.
    BlockFidelity(Common),
    /// Digital against digital-analog Trotterization.
    Compare(Common),
    /// Full protocol with region-wise Trotter steps and block errors.
    Protocol(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV tables and metadata.txt.
    #[arg(long)]
    out: PathBuf,
    /// `section.key=value`, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let (sub, args) = match Cli::parse() {
        Cli::Couplings(a) => (Subcommand::Couplings, a),
        Cli::Modes(a) => (Subcommand::Modes, a),
        Cli::BlockFidelity(a) => (Subcommand::BlockFidelity, a),
        Cli::Compare(a) => (Subcommand::Compare, a),
        Cli::Protocol(a) => (Subcommand::Protocol, a),
    };
    let result = ExperimentConfig::from_file(&args.config, &args.overrides)
        .and_then(|config| run_experiment(&config, sub))
        .and_then(|artifact| {
            artifact.write_to(&args.out)?;
            Ok(artifact)
        });
    match result {
        Ok(artifact) => {
            for w in &artifact.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{sub}: wrote {} table(s) to {}",
                artifact.tables.len(),
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
