use clap::{Args, Parser, Subcommand};
use phonon_stirap::sweep::SweepAxis;
use phonon_stirap_cli::{cmd_simulate, cmd_spectrum, cmd_stirap3, cmd_sweep, load_config, CliError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Adiabatic phonon-fluctuation transfer between two membranes.
#[derive(Debug, Parser)]
#[command(name = "phonon-stirap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML configuration; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat validation warnings as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the fluctuation occupancies.
    Simulate(RunArgs),
    /// Branch-tracked eigenvalues of the coupling matrix.
    Spectrum(RunArgs),
    /// Grid search over pulse and system parameters.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `name=v1,v2,...` with name one of A, T, tau, gamma_M, gamma_m, g, nbar.
        #[arg(long = "axis", value_parser = parse_axis, required = true)]
        axes: Vec<SweepAxis>,
    },
    /// Dark state of the three-level reference system.
    Stirap3 {
        #[arg(long, allow_negative_numbers = true)]
        omega_p: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega_s: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta_p: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        delta_s: f64,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: phonon_stirap::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = load_config(a.config.as_deref(), a.out.as_deref())?;
            let m = cmd_simulate(&cfg, a.strict)?;
            println!("eta = {}, peak n_aM = {}, output in {}", m.eta, m.peak_n_am, cfg.out_dir.display());
        }
        Command::Spectrum(a) => {
            let cfg = load_config(a.config.as_deref(), a.out.as_deref())?;
            let ambiguous = cmd_spectrum(&cfg, a.strict)?;
            println!(
                "{} points, {ambiguous} with ambiguous branch assignment, output in {}",
                cfg.scenario.n_points,
                cfg.out_dir.display()
            );
        }
        Command::Sweep { run, axes } => {
            let cfg = load_config(run.config.as_deref(), run.out.as_deref())?;
            let failed = cmd_sweep(&cfg, &axes, run.strict)?;
            println!("sweep finished, {failed} failed cells, output in {}", cfg.out_dir.display());
        }
        Command::Stirap3 { omega_p, omega_s, delta_p, delta_s } => {
            println!("{}", cmd_stirap3(omega_p, omega_s, delta_p, delta_s)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
