//! Altitude sweep over a receiver grid.
//!
//! Pass one traces every site and extracts its singular values. After a full
//! barrier the population means are computed per altitude layer, and pass two
//! applies every rank criterion. Sites are evaluated in parallel (feature
//! `parallel`) but results are collected in grid order, so outputs never
//! depend on the worker count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::geometry::{Scene, Vec3};
use crate::ingest::{self, build_grid, build_scene, Grid, LoadedConfig, ScenarioConfig};
use crate::mimo::{synthesize_channel, ArrayConfig};
use crate::output;
use crate::propagation::{enumerate_paths, rssi, Coverage, TraceSettings};
use crate::rankanalysis::{
    apply_threshold, condition_number_db, coverage_probabilities, population_mean_thresholds, singular_values,
    CoverageStats, CriterionOutcome, CriterionSpec, RankCriterion, SiteResult,
};
use crate::{wavelength, Error, Result};

/// How sites are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Bounded worker pool. Falls back to sequential without the `parallel` feature.
    Parallel { workers: usize },
}

impl Execution {
    pub fn workers(self) -> usize {
        match self {
            Execution::Sequential => 1,
            Execution::Parallel { workers } => workers.max(1),
        }
    }
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel {
                workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            }
        } else {
            Execution::Sequential
        }
    }
}

/// Runs `f` over `items` and returns results in input order.
pub fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => Ok(items.iter().map(f).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("worker pool: {e}")))?;
            Ok(pool.install(|| items.par_iter().map(f).collect()))
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => Ok(items.iter().map(f).collect()),
    }
}

/// Fixed per-run inputs shared read-only by every site evaluation.
#[derive(Debug, Clone)]
pub struct SiteModel {
    pub tx: Vec3,
    pub tx_power_w: f64,
    pub settings: TraceSettings,
    pub tx_array: ArrayConfig,
    pub n_elements: usize,
    pub d_rx_wavelengths: f64,
    pub rx_array_axis: Vec3,
    pub sum_mode: crate::propagation::SumMode,
}

impl SiteModel {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        let tx = config.tx_position();
        Ok(SiteModel {
            tx,
            tx_power_w: config.tx_power_w,
            settings: TraceSettings::new(config.max_reflections, config.carrier_freq_hz)?,
            tx_array: ArrayConfig::new(config.n_elements, config.d_tx_wavelengths, config.tx_array_axis, tx)?,
            n_elements: config.n_elements,
            d_rx_wavelengths: config.d_rx_wavelengths,
            rx_array_axis: config.rx_array_axis,
            sum_mode: config.rssi_sum_mode,
        })
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.settings.freq_hz)
    }

    /// First pass for one site: paths, RSSI, channel, spectrum, raw CN.
    pub fn evaluate(&self, scene: &Scene, rx: &Vec3) -> Result<SiteResult> {
        let pathset = enumerate_paths(&self.tx, rx, scene, &self.settings)?;
        if pathset.coverage != Coverage::Covered {
            return Ok(SiteResult::uncovered(*rx, pathset.coverage));
        }
        let rx_array = ArrayConfig::new(self.n_elements, self.d_rx_wavelengths, self.rx_array_axis, *rx)?;
        let channel = synthesize_channel(&pathset, &self.tx_array, &rx_array);
        let spectrum = singular_values(&channel)?;
        Ok(SiteResult {
            position: *rx,
            coverage: Coverage::Covered,
            rssi_dbm: rssi(&pathset, self.tx_power_w, self.sum_mode),
            cn_db: condition_number_db(&spectrum),
            spectrum: Some(spectrum),
            outcomes: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerResult {
    pub altitude_m: f64,
    #[serde(skip)]
    pub sites: Vec<SiteResult>,
    /// Per-order population means; `None` when the layer has no covered site.
    pub mean_thresholds: Option<Vec<f64>>,
    pub stats: CoverageStats,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub grid: Grid,
    pub criteria: Vec<CriterionSpec>,
    pub layers: Vec<LayerResult>,
}

/// Second pass: rank and thresholded CN for every criterion.
pub fn apply_criteria(site: &mut SiteResult, criteria: &[CriterionSpec], means: Option<&[f64]>) {
    let Some(spectrum) = &site.spectrum else { return };
    site.outcomes = criteria
        .iter()
        .filter_map(|c| {
            let rule = match c {
                CriterionSpec::RelativeK(k) => RankCriterion::RelativeK(*k),
                CriterionSpec::Mean => RankCriterion::PopulationMean(means?.to_vec()),
            };
            let t = apply_threshold(spectrum, &rule);
            Some(CriterionOutcome {
                rank: t.rank,
                cn_db: condition_number_db(&t.spectrum()),
            })
        })
        .collect();
}

/// Traces and analyses every grid site of every altitude layer.
pub fn sweep(config: &ScenarioConfig, scene: &Scene, exec: Execution) -> Result<SweepResult> {
    let model = SiteModel::from_config(config)?;
    if scene.is_inside_building(&model.tx) {
        return Err(Error::Config(format!("transmitter at {:?} is inside a building", model.tx)));
    }
    let grid = build_grid(config);
    let points: Vec<Vec3> = grid.layers().into_iter().flatten().collect();
    let evaluated = map_ordered(&points, exec, |p| model.evaluate(scene, p))?;
    let mut sites = evaluated.into_iter().collect::<Result<Vec<_>>>()?.into_iter();

    // barrier: every spectrum is known before any mean-criterion rank
    let per_layer = grid.sites_per_layer();
    let mut layers = Vec::with_capacity(grid.altitudes.len());
    for &altitude_m in &grid.altitudes {
        let mut layer: Vec<SiteResult> = sites.by_ref().take(per_layer).collect();
        let mean_thresholds = match population_mean_thresholds(&layer, config.mean_population) {
            Ok(m) => Some(m),
            Err(Error::EmptyPopulation) => {
                if config.rank_criteria.contains(&CriterionSpec::Mean) {
                    log::warn!("altitude {altitude_m} m: no covered sites, mean criterion skipped");
                }
                None
            }
            Err(e) => return Err(e),
        };
        for site in &mut layer {
            apply_criteria(site, &config.rank_criteria, mean_thresholds.as_deref());
        }
        let stats = coverage_probabilities(&layer, config.rank_criteria.len());
        if !stats.is_conserved() {
            return Err(Error::Domain(format!("altitude {altitude_m} m: coverage counts do not add up")));
        }
        layers.push(LayerResult {
            altitude_m,
            sites: layer,
            mean_thresholds,
            stats,
        });
    }
    Ok(SweepResult {
        grid,
        criteria: config.rank_criteria.clone(),
        layers,
    })
}

/// Scene statistics reported by `validate`.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub config_digest: String,
    pub scene_digest: String,
    pub n_buildings: usize,
    pub n_facets: usize,
    pub rejected_features: Vec<String>,
    pub tx_enu_m: [f64; 3],
    pub tx_inside_building: bool,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub altitudes_m: Vec<f64>,
}

/// A config with its scene, ready to sweep.
pub struct PreparedScenario {
    pub loaded: LoadedConfig,
    pub scene: Scene,
    pub report: ScenarioReport,
}

pub fn prepare(config_path: &Path) -> Result<PreparedScenario> {
    let loaded = ingest::load_config(config_path)?;
    let config = &loaded.config;
    let set = ingest::load_config_buildings(config)?;
    let rejected = set.rejected.iter().map(|r| format!("{}: {}", r.id, r.reason)).collect();
    let scene = build_scene(config, set.buildings)?;
    let grid = build_grid(config);
    let tx = config.tx_position();
    let report = ScenarioReport {
        scenario: config.name.clone(),
        config_digest: loaded.digest.clone(),
        scene_digest: scene.digest(),
        n_buildings: scene.buildings().len(),
        n_facets: scene.facets().len(),
        rejected_features: rejected,
        tx_enu_m: [tx.x, tx.y, tx.z],
        tx_inside_building: scene.is_inside_building(&tx),
        grid_nx: grid.nx(),
        grid_ny: grid.ny(),
        altitudes_m: grid.altitudes.clone(),
    };
    Ok(PreparedScenario { loaded, scene, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub ingest_s: f64,
    pub sweep_s: f64,
    pub output_s: f64,
}

/// Everything `run` produced.
pub struct RunOutcome {
    pub manifest: output::Manifest,
    pub result: SweepResult,
    pub out_dir: PathBuf,
}

/// Full pipeline: load, sweep, write `sites.csv`, `cdf.csv`, heatmaps and
/// `manifest.json` into `out_dir`.
pub fn run_sweep(config_path: &Path, out_dir: &Path, exec: Execution) -> Result<RunOutcome> {
    let t0 = Instant::now();
    let prepared = prepare(config_path)?;
    let t1 = Instant::now();
    let result = sweep(&prepared.loaded.config, &prepared.scene, exec)?;
    let t2 = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let heatmaps = output::write_all(out_dir, &prepared.loaded.config, &result)?;
    let t3 = Instant::now();
    let timings = Timings {
        ingest_s: (t1 - t0).as_secs_f64(),
        sweep_s: (t2 - t1).as_secs_f64(),
        output_s: (t3 - t2).as_secs_f64(),
    };
    let manifest = output::Manifest::new(&prepared.report, &result, heatmaps, timings, exec.workers());
    output::write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        manifest,
        result,
        out_dir: out_dir.to_path_buf(),
    })
}
