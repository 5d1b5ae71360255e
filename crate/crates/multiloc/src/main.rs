use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use multiloc::array_file::resolve_geometry;
use multiloc::bench::run_bench;
use multiloc::campaign::{run_campaign, CampaignConfig, CampaignOutputs};
use multiloc::config::{MethodChoice, RunConfig};
use multiloc::model_file::{self, ModelHeader};
use multiloc::output::{estimate_rows, write_csv, SummaryCsvRow, ESTIMATE_HEADER, SUMMARY_HEADER};
use multiloc::pipeline::{build_grid, build_model, Localizer};
use multiloc::plot::{plot_data, Truth};
use multiloc::{wav, Error, Result};

/// Multi-source sound localization with SRP-PHAT and SVD-PHAT.
#[derive(Debug, Parser)]
#[command(name = "multiloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build an SVD-PHAT model file.
    Precompute {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localize a multichannel WAV file, one CSV row per estimate.
    Localize {
        wav: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Precomputed model; built on the fly when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV destination, stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation campaign and write its tables to a directory.
    Simulate {
        /// Campaign JSON; run flags override its `run` section.
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Scenarios per (geometry, source count) cell.
        #[arg(long)]
        simulations: Option<usize>,
        /// Comma-separated source counts.
        #[arg(long, value_delimiter = ',')]
        sources: Option<Vec<usize>>,
        /// Comma-separated geometries; defaults to all presets.
        #[arg(long, value_delimiter = ',')]
        geometries: Option<Vec<String>>,
        /// Seconds of signal per source.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        anechoic: bool,
        /// Also write each rendered mixture as a WAV file.
        #[arg(long)]
        wav: bool,
        /// Also write per-frame estimates and errors for each scenario.
        #[arg(long)]
        detail: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time both methods per frame and write a JSON report.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        frames: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an estimates CSV into azimuth traces for a linear array.
    PlotData {
        estimates: PathBuf,
        /// Preset name or array JSON file.
        #[arg(long, default_value = "linear7")]
        geometry: String,
        /// Ground truth as an azimuth in radians or a direction `x,y,z`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        truth: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run configuration JSON; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset (linear7, planar7, spatial7) or array JSON file.
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    grid_level: Option<u32>,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long)]
    frame: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    dtheta: Option<f64>,
    /// Speed of sound in m/s.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    scans: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodChoice>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => base,
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        apply!(geometry, grid_level, fs, frame, hop, alpha, delta, dtheta, c, scans, method, seed);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_default(&self) -> Result<RunConfig> {
        self.resolve(RunConfig::default())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Loads a model and aligns the configuration with it.
fn load_model(
    path: &Path,
    run: &RunArgs,
    cfg: &mut RunConfig,
) -> Result<Arc<multiloc::core::SvdPhatModel>> {
    let (header, model) = model_file::load(path)?;
    let ModelHeader {
        grid_level,
        frame_size,
        delta,
        fs,
        c,
        ..
    } = header;
    let conflicts = [
        run.grid_level.is_some_and(|v| v != grid_level),
        run.frame.is_some_and(|v| v != frame_size),
        run.delta.is_some_and(|v| v != delta),
        fs != cfg.fs,
        c != cfg.c,
    ];
    if conflicts.iter().any(|&x| x) {
        return Err(Error::Data(format!(
            "{}: model was built for level {grid_level}, N={frame_size}, delta={delta}, fs={fs}, c={c}",
            path.display()
        )));
    }
    cfg.grid_level = grid_level;
    cfg.frame = frame_size;
    cfg.delta = delta;
    cfg.validate()?;
    Ok(Arc::new(model))
}

fn precompute(run: &RunArgs, out: &Path) -> Result<()> {
    let cfg = run.resolve_default()?;
    let array = resolve_geometry(&cfg.geometry)?;
    let grid = build_grid(&cfg)?;
    let model = build_model(&cfg, &array, &grid)?;
    model_file::save(out, &model, array.name(), cfg.fs, cfg.c)?;
    println!(
        "K = {} (Q = {}, P = {}, N = {}), energy ratio = {:.9}",
        model.rank(),
        model.num_directions(),
        model.num_pairs(),
        model.frame_size(),
        model.captured_energy() / model.total_energy()
    );
    Ok(())
}

fn localize(
    wav_path: &Path,
    run: &RunArgs,
    model: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = run.resolve_default()?;
    let array = resolve_geometry(&cfg.geometry)?;
    let model = match model {
        Some(p) if cfg.method.runs_svd() => Some(load_model(p, run, &mut cfg)?),
        _ => None,
    };
    let audio = wav::read_checked(wav_path, array.num_mics(), cfg.fs)?;
    let localizer = Localizer::new(&cfg, array, model)?;
    let frames = localizer.process(&audio.channels, cfg.scans)?;
    write_csv(output(out)?, ESTIMATE_HEADER, &estimate_rows(&frames))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    campaign: Option<&Path>,
    run: &RunArgs,
    workers: usize,
    simulations: Option<usize>,
    sources: Option<Vec<usize>>,
    geometries: Option<Vec<String>>,
    duration: Option<f64>,
    anechoic: bool,
    outputs: CampaignOutputs,
    out: &Path,
) -> Result<()> {
    let mut cfg = match campaign {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    cfg.run = run.resolve(cfg.run.clone())?;
    if let Some(n) = simulations {
        cfg.simulations = n;
    }
    if let Some(s) = sources {
        cfg.sources = s;
    }
    if let Some(g) = geometries {
        cfg.geometries = g;
    } else if run.geometry.is_some() {
        cfg.geometries = vec![cfg.run.geometry.clone()];
    }
    if let Some(d) = duration {
        cfg.duration = d;
    }
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    cfg.anechoic |= anechoic;
    let report = run_campaign(&cfg, workers, Some(out), outputs)?;
    let table: Vec<SummaryCsvRow> = report.summary.iter().map(SummaryCsvRow::from).collect();
    write_csv(io::stdout().lock(), SUMMARY_HEADER, &table)
}

fn bench(run: &RunArgs, model: Option<&Path>, frames: usize, out: Option<&Path>) -> Result<()> {
    let mut cfg = run.resolve_default()?;
    cfg.method = MethodChoice::Both;
    let array = resolve_geometry(&cfg.geometry)?;
    let model = model.map(|p| load_model(p, run, &mut cfg)).transpose()?;
    let localizer = Localizer::new(&cfg, array, model)?;
    let report = run_bench(&localizer, frames, cfg.scans, cfg.seed)?;
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io("report", e))
}

fn plot(estimates: &Path, geometry: &str, truths: &[String], out: Option<&Path>) -> Result<()> {
    let array = resolve_geometry(geometry)?;
    let truths = truths
        .iter()
        .map(|t| Truth::parse(t))
        .collect::<Result<Vec<_>>>()?;
    let input = File::open(estimates).map_err(|e| Error::io(estimates, e))?;
    plot_data(input, output(out)?, &array, &truths)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Precompute { run, out } => precompute(&run, &out),
        Command::Localize {
            wav,
            run,
            model,
            out,
        } => localize(&wav, &run, model.as_deref(), out.as_deref()),
        Command::Simulate {
            campaign,
            run,
            workers,
            simulations,
            sources,
            geometries,
            duration,
            anechoic,
            wav,
            detail,
            out,
        } => simulate(
            campaign.as_deref(),
            &run,
            workers,
            simulations,
            sources,
            geometries,
            duration,
            anechoic,
            CampaignOutputs { wavs: wav, detail },
            &out,
        ),
        Command::Bench {
            run,
            model,
            frames,
            out,
        } => bench(&run, model.as_deref(), frames, out.as_deref()),
        Command::PlotData {
            estimates,
            geometry,
            truth,
            out,
        } => plot(&estimates, &geometry, &truth, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
