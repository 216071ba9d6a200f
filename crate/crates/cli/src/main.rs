use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use contagion_cli::cache;
use contagion_cli::config::{Overrides, Preset, RunConfig};
use contagion_cli::plot::{read_rows, render_svg};
use contagion_cli::run::{load_manifest, run_and_write};
use contagion_core::balsheet::{average_gamma, homogenize, synthesize, write_sheets_csv};
use contagion_core::ensemble::sample_network;
use contagion_core::shocks::{CalibrationTarget, DEFAULT_CALIBRATION_TRIALS};

/// Monte Carlo simulator of default cascades in interbank networks with
/// shadow and regulated banks.
#[derive(Parser)]
#[command(name = "contagion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment; sweeps its grid when the config has one.
    Run(RunArgs),
    /// Run a grid sweep (the config's grid or `--grid`).
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated f (or q) values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Calibrate the shock amplitude and cache it.
    Calibrate {
        #[arg(long, default_value_t = 2)]
        assets: usize,
        #[arg(long, default_value_t = 0.07)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-3)]
        p: f64,
        #[arg(long, default_value_t = 1.5)]
        dof: f64,
        #[arg(long, default_value_t = DEFAULT_CALIBRATION_TRIALS)]
        trials: u64,
    },
    /// Draw a result CSV as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write one sample's weighted network as an edge list.
    ExportNetwork(ExportArgs),
    /// Write one sample's balance sheets as CSV.
    ExportSheets(ExportArgs),
}

#[derive(Args)]
struct Source {
    /// Shipped experiment.
    #[arg(long, value_enum, conflicts_with_all = ["config", "from_manifest"])]
    preset: Option<Preset>,
    /// Experiment file.
    #[arg(long, conflicts_with = "from_manifest")]
    config: Option<PathBuf>,
    /// Rerun the resolved configuration recorded in a run manifest.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Banks (per layer for the layered topology).
    #[arg(long)]
    n: Option<usize>,
    /// Target top-5 loan share ρ.
    #[arg(long)]
    concentration: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    source: Source,
    /// Sample index.
    #[arg(long, default_value_t = 0)]
    sample: usize,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Source {
    fn load(&self, grid: Option<Vec<f64>>) -> Result<RunConfig> {
        let mut config = match (&self.preset, &self.config, &self.from_manifest) {
            (Some(p), _, _) => RunConfig::preset(*p),
            (_, Some(path), _) => RunConfig::load(path)?,
            (_, _, Some(path)) => load_manifest(path)?.config,
            _ => bail!("one of --preset, --config or --from-manifest is required"),
        };
        config.apply(&Overrides {
            samples: self.samples,
            seed: self.seed,
            n_banks: self.n,
            concentration: self.concentration,
            grid,
        });
        Ok(config)
    }
}

fn run(args: &RunArgs, config: RunConfig) -> Result<()> {
    let (manifest, csv) = run_and_write(&config, args.workers, &args.out_dir)?;
    println!("{}", csv.display());
    eprintln!(
        "{}: {} samples, s = {}, {:.1} s",
        manifest.config.experiment.name,
        manifest.config.experiment.samples,
        manifest.calibration_scale,
        manifest.wall_time_seconds
    );
    Ok(())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn export(args: &ExportArgs, sheets_only: bool) -> Result<()> {
    let config = args.source.load(None)?;
    // networks and sheets do not depend on the shock amplitude
    let experiment = config.experiment(0.0, 1)?;
    let network = sample_network(&experiment, args.sample)?;
    let mut out = output(&args.out)?;
    if sheets_only {
        let mut sheets = synthesize(&network, &experiment.system)?;
        if experiment.homogeneous_gamma {
            sheets = homogenize(&sheets, average_gamma(&sheets)?)?;
        }
        write_sheets_csv(&sheets, network.topology().classes(), &mut out)?;
    } else {
        network.write_edge_list(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.source.load(None)?;
            run(&args, config)
        }
        Command::Sweep { run: args, grid } => {
            let config = args.source.load(grid)?;
            if config.grid().is_none() {
                bail!("sweep needs a grid: add a [sweep] section or pass --grid");
            }
            run(&args, config)
        }
        Command::Calibrate {
            assets,
            gamma,
            p,
            dof,
            trials,
        } => {
            let target = CalibrationTarget {
                n_assets: assets,
                gamma,
                target_p: p,
                dof,
                trials,
                ..CalibrationTarget::default()
            };
            let dir = cache::cache_dir();
            let found = cache::calibrated_scale(&dir, &target)?;
            println!("{}", found.scale);
            eprintln!(
                "{} ({})",
                if found.hit { "cached" } else { "calibrated" },
                dir.display()
            );
            Ok(())
        }
        Command::Plot { csv, out } => {
            let file = fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let rows = read_rows(file).with_context(|| csv.display().to_string())?;
            let svg = render_svg(&rows).with_context(|| csv.display().to_string())?;
            fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Command::ExportNetwork(args) => export(&args, false),
        Command::ExportSheets(args) => export(&args, true),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
