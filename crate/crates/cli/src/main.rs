use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sectorscope_cli::commands::{self, *};

#[derive(Debug, Parser)]
#[command(name = "sectorscope", version, about = "Correlation eigenspectra, sector clustering, spectral changepoints and sector-rotation backtests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align prices and sectors into a panel file.
    Ingest(IngestArgs),
    /// Rolling correlation matrices.
    Rollcorr(RollcorrArgs),
    /// Eigenspectrum paths against the Marchenko-Pastur edges.
    Rmt(RmtArgs),
    /// Per-sector explained-variance paths and their clustering.
    Sectors(SectorsArgs),
    /// Reversible-jump changepoint sampling of one series.
    Changepoints(ChangepointArgs),
    /// Time-varying spectra and their distances.
    Spectra(SpectraArgs),
    /// Distances between changepoint-distribution sets.
    Mjw(MjwArgs),
    /// Security-selection and sector-allocation sweeps.
    Portfolio(PortfolioArgs),
    /// Every stage from a config file.
    Pipeline(PipelineArgs),
    /// Re-render figures of a pipeline bundle.
    Plots(PlotsArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Rollcorr(a) => commands::rollcorr(a),
        Command::Rmt(a) => commands::rmt(a),
        Command::Sectors(a) => commands::sectors(a),
        Command::Changepoints(a) => commands::changepoints(a),
        Command::Spectra(a) => commands::spectra(a),
        Command::Mjw(a) => commands::mjw(a),
        Command::Portfolio(a) => commands::portfolio(a),
        Command::Pipeline(a) => commands::run_pipeline(a).map(|_| ()),
        Command::Plots(a) => commands::plots(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
