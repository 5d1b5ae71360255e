//! Simulation campaigns: random rooms per (geometry, source count), rendered,
//! localized with both methods and scored.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use multiloc_core::eval::{
    campaign_summary, frame_error, ErrorRecord, GeometryClass, Method, SimulationRmse, SummaryRow,
};
use multiloc_core::{MicArray, Vec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_file::resolve_geometry;
use crate::config::{MethodChoice, RunConfig};
use crate::output::{self, PhiRow, RmseRow, SummaryCsvRow};
use crate::pipeline::{FrameResult, Localizer};
use crate::sim::{
    generate_scenario, render_scenario, synth_speech_like, AbsorptionModel, ImageSource, Scenario,
    ScenarioConfig,
};
use crate::wav::{self, Audio};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Presets or array JSON paths.
    pub geometries: Vec<String>,
    pub sources: Vec<usize>,
    /// Scenarios per (geometry, source count) cell.
    pub simulations: usize,
    pub seed: u64,
    /// Length of each source signal in seconds.
    pub duration: f64,
    /// Direct path only, ignoring the sampled RT60.
    pub anechoic: bool,
    pub absorption: AbsorptionModel,
    pub scenario: ScenarioConfig,
    pub run: RunConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            geometries: vec!["linear7".into(), "planar7".into(), "spatial7".into()],
            sources: vec![1, 2, 3],
            simulations: 50,
            seed: 0,
            duration: 2.0,
            anechoic: false,
            absorption: AbsorptionModel::Calibrated,
            scenario: ScenarioConfig::default(),
            run: RunConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::config::load_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.geometries.is_empty() || self.sources.is_empty() || self.simulations == 0 {
            return Err(Error::Config(
                "campaign needs geometries, source counts and simulations".into(),
            ));
        }
        if self.sources.contains(&0) {
            return Err(Error::Config("source counts must be positive".into()));
        }
        if !(self.duration > 0.0) {
            return Err(Error::Config("duration must be positive".into()));
        }
        self.scenario.validate()
    }
}

/// Seed of one scenario, independent of scheduling order.
pub fn scenario_seed(campaign_seed: u64, geometry: usize, sources: usize, index: usize) -> u64 {
    let mut h = campaign_seed;
    for v in [geometry as u64, sources as u64, index as u64] {
        h = splitmix(h ^ splitmix(v.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything measured for one simulated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub geometry: String,
    pub sources: usize,
    pub index: usize,
    pub scenario: Scenario,
    pub truths: Vec<Vec3>,
    /// Frames where at least one method produced an estimate.
    pub frames: usize,
    pub srp: ErrorRecord,
    pub svd: ErrorRecord,
    pub frame_results: Vec<FrameResult>,
    pub frame_times: Vec<f64>,
    pub audio: Option<Audio>,
}

impl ScenarioOutcome {
    pub fn rmse(&self, method: Method) -> f64 {
        let record = match method {
            Method::Srp => &self.srp,
            Method::Svd => &self.svd,
        };
        record.rmse().unwrap_or(std::f64::consts::PI)
    }
}

/// Scores frames against ground truth. Frames where neither method emits are
/// skipped; a method that stays silent in a counted frame scores π.
pub fn score_frames(
    frames: &[FrameResult],
    truths: &[Vec3],
    class: GeometryClass,
) -> Result<(ErrorRecord, ErrorRecord, Vec<f64>)> {
    let mut srp = ErrorRecord::new(truths.len(), class)?;
    let mut svd = ErrorRecord::new(truths.len(), class)?;
    let mut times = Vec::new();
    let none = multiloc_core::ScanResult::default();
    for f in frames.iter().filter(|f| !f.is_silent()) {
        let s = f.srp.as_ref().unwrap_or(&none);
        let v = f.svd.as_ref().unwrap_or(&none);
        srp.push_frame(&frame_error(s.doas(), truths, class)?)?;
        svd.push_frame(&frame_error(v.doas(), truths, class)?)?;
        times.push(f.time_s);
    }
    Ok((srp, svd, times))
}

/// Shared per-geometry state for a campaign.
#[derive(Debug, Clone)]
pub struct GeometrySetup {
    pub label: String,
    pub array: MicArray,
    pub class: GeometryClass,
    pub localizer: Localizer,
}

pub fn prepare_geometries(config: &CampaignConfig) -> Result<Vec<GeometrySetup>> {
    let run = RunConfig {
        method: MethodChoice::Both,
        ..config.run.clone()
    };
    config
        .geometries
        .iter()
        .map(|g| {
            let array = resolve_geometry(g)?;
            let localizer = Localizer::new(&run, array.clone(), None)?;
            Ok(GeometrySetup {
                label: g.clone(),
                class: GeometryClass::of(&array),
                array,
                localizer,
            })
        })
        .collect()
}

/// Generates, renders, localizes and scores one scenario.
pub fn run_scenario(
    config: &CampaignConfig,
    setup: &GeometrySetup,
    geometry_index: usize,
    sources: usize,
    index: usize,
    keep_audio: bool,
) -> Result<ScenarioOutcome> {
    let seed = scenario_seed(config.seed, geometry_index, sources, index);
    let scenario_cfg = ScenarioConfig {
        sources,
        ..config.scenario.clone()
    };
    let scenario = generate_scenario(&scenario_cfg, seed)?;
    let run = &config.run;
    let sim = if config.anechoic {
        ImageSource::anechoic(scenario.room, run.fs, run.c)
    } else {
        ImageSource::reverberant(
            scenario.room,
            scenario.rt60,
            run.fs,
            run.c,
            config.absorption,
        )
    };
    let signals: Vec<Vec<f64>> = (0..sources)
        .map(|t| synth_speech_like(splitmix(seed ^ (t as u64 + 1)), config.duration, run.fs))
        .collect();
    let audio = render_scenario(&scenario, &setup.array, &sim, &signals)?;
    let frames = setup.localizer.process(&audio.channels, sources)?;
    let truths = scenario.true_doas();
    let (srp, svd, frame_times) = score_frames(&frames, &truths, setup.class)?;
    Ok(ScenarioOutcome {
        geometry: setup.label.clone(),
        sources,
        index,
        scenario,
        truths,
        frames: srp.num_frames(),
        srp,
        svd,
        frame_results: frames,
        frame_times,
        audio: keep_audio.then_some(audio),
    })
}

/// Output switches beyond the always-written tables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CampaignOutputs {
    pub wavs: bool,
    pub detail: bool,
}

#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub rmse: Vec<RmseRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every scenario of the campaign on `workers` threads. Results do not
/// depend on the worker count.
pub fn run_campaign(
    config: &CampaignConfig,
    workers: usize,
    out_dir: Option<&Path>,
    outputs: CampaignOutputs,
) -> Result<CampaignReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let setups = Arc::new(pool.install(|| prepare_geometries(config))?);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let jobs: Vec<(usize, usize, usize)> = (0..setups.len())
        .flat_map(|g| {
            config
                .sources
                .iter()
                .flat_map(move |&t| (0..config.simulations).map(move |i| (g, t, i)))
        })
        .collect();

    let rows: Vec<(RmseRow, Vec<ScenarioRow>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t, i)| {
                let outcome = run_scenario(config, &setups[g], g, t, i, outputs.wavs)?;
                if let Some(dir) = out_dir {
                    write_scenario_files(dir, &outcome, outputs)?;
                }
                Ok((
                    RmseRow {
                        geometry: outcome.geometry.clone(),
                        sources: t,
                        simulation: i,
                        seed: outcome.scenario.seed,
                        rt60: if config.anechoic {
                            0.0
                        } else {
                            outcome.scenario.rt60
                        },
                        frames: outcome.frames,
                        srp_rmse: outcome.rmse(Method::Srp),
                        svd_rmse: outcome.rmse(Method::Svd),
                    },
                    scenario_rows(&outcome),
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let rmse: Vec<RmseRow> = rows.iter().map(|(r, _)| r.clone()).collect();
    let records: Vec<SimulationRmse> = rmse
        .iter()
        .flat_map(|r| {
            [(Method::Srp, r.srp_rmse), (Method::Svd, r.svd_rmse)].map(|(method, value)| {
                SimulationRmse {
                    geometry: r.geometry.clone(),
                    sources: r.sources,
                    method,
                    rmse: value,
                }
            })
        })
        .collect();
    let mut summary = campaign_summary(&records);
    // keep the configured geometry order rather than alphabetical
    summary.sort_by_key(|row| {
        (
            config.geometries.iter().position(|g| *g == row.geometry),
            row.sources,
        )
    });

    if let Some(dir) = out_dir {
        let scenarios: Vec<ScenarioRow> = rows.into_iter().flat_map(|(_, s)| s).collect();
        write_table(&dir.join("scenarios.csv"), SCENARIO_HEADER, &scenarios)?;
        write_table(&dir.join("rmse.csv"), output::RMSE_HEADER, &rmse)?;
        let table: Vec<SummaryCsvRow> = summary.iter().map(SummaryCsvRow::from).collect();
        write_table(&dir.join("summary.csv"), output::SUMMARY_HEADER, &table)?;
    }
    Ok(CampaignReport { rmse, summary })
}

/// Ground truth: one row per source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub geometry: String,
    pub sources: usize,
    pub simulation: usize,
    pub seed: u64,
    pub rt60: f64,
    pub array_x: f64,
    pub array_y: f64,
    pub array_z: f64,
    pub source: usize,
    pub source_x: f64,
    pub source_y: f64,
    pub source_z: f64,
    pub doa_x: f64,
    pub doa_y: f64,
    pub doa_z: f64,
}

const SCENARIO_HEADER: &[&str] = &[
    "geometry",
    "sources",
    "simulation",
    "seed",
    "rt60",
    "array_x",
    "array_y",
    "array_z",
    "source",
    "source_x",
    "source_y",
    "source_z",
    "doa_x",
    "doa_y",
    "doa_z",
];

fn scenario_rows(o: &ScenarioOutcome) -> Vec<ScenarioRow> {
    let s = &o.scenario;
    let c = s.array_pose.center;
    s.source_positions
        .iter()
        .zip(&o.truths)
        .enumerate()
        .map(|(t, (p, d))| ScenarioRow {
            geometry: o.geometry.clone(),
            sources: o.sources,
            simulation: o.index,
            seed: s.seed,
            rt60: s.rt60,
            array_x: c[0],
            array_y: c[1],
            array_z: c[2],
            source: t + 1,
            source_x: p[0],
            source_y: p[1],
            source_z: p[2],
            doa_x: d[0],
            doa_y: d[1],
            doa_z: d[2],
        })
        .collect()
}

fn write_table<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    output::write_csv(BufWriter::new(file), header, rows)
}

fn scenario_stem(o: &ScenarioOutcome) -> String {
    let name: String = o
        .geometry
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{name}_t{}_{:04}", o.sources, o.index)
}

fn write_scenario_files(dir: &Path, o: &ScenarioOutcome, outputs: CampaignOutputs) -> Result<()> {
    let stem = scenario_stem(o);
    if let Some(audio) = &o.audio {
        wav::write(&dir.join(format!("{stem}.wav")), audio)?;
    }
    if outputs.detail {
        let rows = output::estimate_rows(&o.frame_results);
        write_table(
            &dir.join(format!("{stem}_estimates.csv")),
            output::ESTIMATE_HEADER,
            &rows,
        )?;
        let mut phi = Vec::new();
        for (l, &time_s) in o.frame_times.iter().enumerate() {
            for (method, record) in [(Method::Srp, &o.srp), (Method::Svd, &o.svd)] {
                for (t, &value) in record.frame(l).iter().enumerate() {
                    phi.push(PhiRow {
                        time_s,
                        method: method.as_str().into(),
                        source: t + 1,
                        phi: value,
                    });
                }
            }
        }
        write_table(
            &dir.join(format!("{stem}_phi.csv")),
            output::PHI_HEADER,
            &phi,
        )?;
    }
    Ok(())
}
