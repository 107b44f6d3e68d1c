use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use reprtune_core::forecaster::ModelConfig;
use reprtune_core::transform::{SmoothingSpec, TransformConfig};
use reprtune_store::fixtures::{air_quality_csv, sunspot_csv};
use reprtune_store::report::{profile_report, ReportFormat};
use reprtune_store::{api, run_pipeline, PipelineOptions, RunStore};

#[derive(Parser)]
#[command(name = "reprtune", version, about = "Time-series representation tuning: sweep, serve, report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write a run store.
    Run(RunArgs),
    /// Serve a run store over the JSON API.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Export the profile table.
    Report {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic dataset CSV.
    Fixture {
        #[arg(long, value_enum)]
        kind: FixtureKind,
        /// Number of rows (months or hours).
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    Sunspot,
    AirQuality,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// CSV with a timestamp column followed by numeric variables.
    #[arg(long)]
    data: PathBuf,
    /// Target variable id.
    #[arg(long)]
    target: String,
    /// Output directory of the run store.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Smoothing specs, e.g. `Raw,MA-3,WMA-13`.
    #[arg(long, value_delimiter = ',', default_value = "Raw")]
    smoothing: Vec<SmoothingSpec>,
    /// Skip lengths, e.g. `1,3`.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    skips: Vec<usize>,
    #[arg(long)]
    window_length: usize,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = TransformConfig::DEFAULT_SPLIT)]
    split_ratio: f64,
    #[arg(long, default_value_t = ModelConfig::default().conv_filters)]
    conv_filters: usize,
    #[arg(long, default_value_t = ModelConfig::default().conv_kernel)]
    conv_kernel: usize,
    #[arg(long, default_value_t = ModelConfig::default().lstm_units)]
    lstm_units: usize,
    #[arg(long, default_value_t = ModelConfig::default().dense_units)]
    dense_units: usize,
    #[arg(long, default_value_t = ModelConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = ModelConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = ModelConfig::default().batch_size)]
    batch_size: usize,
    #[arg(long, default_value_t = PipelineOptions::default().stripe_pixels)]
    pixels: usize,
    #[arg(long, default_value_t = PipelineOptions::default().scatter_sample)]
    scatter_sample: usize,
    #[arg(long, default_value_t = PipelineOptions::default().mosaic_grid)]
    mosaic_grid: usize,
    #[arg(long, default_value_t = PipelineOptions::default().time_segments)]
    time_segments: usize,
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let transform = TransformConfig {
        smoothing: args.smoothing,
        skips: args.skips,
        window_length: args.window_length,
        horizon: args.horizon,
        split_ratio: args.split_ratio,
    };
    let model = ModelConfig {
        conv_filters: args.conv_filters,
        conv_kernel: args.conv_kernel,
        lstm_units: args.lstm_units,
        dense_units: args.dense_units,
        horizon: args.horizon,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let options = PipelineOptions {
        stripe_pixels: args.pixels,
        scatter_sample: args.scatter_sample,
        mosaic_grid: args.mosaic_grid,
        time_segments: args.time_segments,
    };
    let store = run_pipeline(&args.data, &args.target, &transform, &model, &options, &args.out)?;
    let failed = store.manifest.representations.len() - store.representations.len();
    println!(
        "{} representations written to {} ({failed} failed)",
        store.representations.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Serve { store, port, host } => tokio::runtime::Runtime::new()
            .context("starting runtime")
            .and_then(|rt| Ok(rt.block_on(api::serve(&store, SocketAddr::new(host, port)))?)),
        Command::Report { store, format, output } => (|| {
            let store = RunStore::load(&store)?;
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            let bytes = profile_report(&store, format)?;
            match output {
                Some(path) => std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display())),
                None => std::io::stdout().write_all(&bytes).context("writing report"),
            }
        })(),
        Command::Fixture { kind, length, seed, out } => {
            let text = match kind {
                FixtureKind::Sunspot => sunspot_csv(length, seed),
                FixtureKind::AirQuality => air_quality_csv(length, seed),
            };
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
