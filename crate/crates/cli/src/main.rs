use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holonome::{GateName, RateConvention};
use holonome_cli::config::Format;
use holonome_cli::{dispatch, parse_config, CliError, Experiment, FlagOverrides};

/// Holonomic single-qubit gates on a photon shared by two optomechanically coupled cavities.
#[derive(Parser)]
#[command(name = "holonome", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print U(θ, φ) and the pulse plan for a gate
    Gate(RunArgs),
    /// Move the photon from cavity 1 to cavity 2 with a NOT pulse
    Transfer(RunArgs),
    /// Prepare (|10⟩ + |01⟩)/√2 with a Hadamard pulse
    Entangle(RunArgs),
    /// Final fidelity over a log-spaced (κ, γ_m) grid
    Sweep(RunArgs),
    /// Check the holonomy and parallel-transport identities
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file or a previous run's manifest.json
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog gate: not, rotation, hadamard, phase_flip, phase_pi4
    #[arg(long)]
    gate: Option<GateName>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Effective coupling G₀/2π in MHz
    #[arg(long = "g0-mhz-over-2pi")]
    g0_mhz_over_2pi: Option<f64>,
    /// Cavity decay κ = κ₁ = κ₂, read through --rate-convention
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Mechanical damping γ_m, read through --rate-convention
    #[arg(long = "gamma-m", allow_hyphen_values = true)]
    gamma_m: Option<f64>,
    /// Thermal phonon occupation of the mechanical bath
    #[arg(long, allow_hyphen_values = true)]
    nth: Option<f64>,
    /// angular: rates are rad/μs; linear: rates are MHz and get multiplied by 2π
    #[arg(long = "rate-convention")]
    rate_convention: Option<RateConvention>,
    /// Largest integrator step in μs
    #[arg(long)]
    dt: Option<f64>,
    /// Number of stored samples along the pulse
    #[arg(long)]
    samples: Option<usize>,
    /// Mechanical Fock-space dimension
    #[arg(long = "mech-cutoff")]
    mech_cutoff: Option<usize>,
    /// Grid points per sweep axis
    #[arg(long)]
    points: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: csv, json, svg
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

impl RunArgs {
    fn overrides(&self) -> FlagOverrides {
        FlagOverrides {
            gate: self.gate,
            theta: self.theta,
            phi: self.phi,
            g0_mhz_over_2pi: self.g0_mhz_over_2pi,
            kappa: self.kappa,
            gamma_m: self.gamma_m,
            n_th: self.nth,
            rate_convention: self.rate_convention,
            dt: self.dt,
            samples: self.samples,
            mech_cutoff: self.mech_cutoff,
            points: self.points,
            out: self.out.clone(),
            formats: self.format.clone(),
        }
    }
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<(), CliError> {
    let (config, provenance) = parse_config(experiment, args.config.as_deref(), &args.overrides())?;
    let outcome = dispatch(&config, &provenance)?;
    println!("{}", outcome.summary);
    println!("wrote {} to {}", outcome.files.join(", "), outcome.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Gate(a) => (Experiment::Gate, a),
        Command::Transfer(a) => (Experiment::Transfer, a),
        Command::Entangle(a) => (Experiment::Entangle, a),
        Command::Sweep(a) => (Experiment::Sweep, a),
        Command::Verify(a) => (Experiment::Verify, a),
    };
    match run(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("holonome: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
