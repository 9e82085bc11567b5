//! Result files: per-site CSV, empirical CDFs, heatmap PNGs and a JSON manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::Serialize;

use crate::ingest::ScenarioConfig;
use crate::propagation::Coverage;
use crate::rankanalysis::{ecdf, CriterionSpec, SiteResult};
use crate::sweep::{ScenarioReport, SweepResult, Timings};
use crate::{Error, Result};

/// Colour for sites without coverage.
pub const COLOR_NO_COVERAGE: [u8; 3] = [255, 255, 255];
/// Colour for sites inside a building.
pub const COLOR_IN_BUILDING: [u8; 3] = [0, 0, 0];
/// Colour for covered sites whose value is undefined (e.g. CN with rank < 2).
pub const COLOR_UNDEFINED: [u8; 3] = [128, 128, 128];

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Shortest round-trip decimal, stable across platforms.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn altitude_tag(alt: f64) -> String {
    fmt_f64(alt).replace('.', "p").replace('-', "m")
}

/// Number of singular-value columns written per site.
pub fn sigma_columns(config: &ScenarioConfig) -> usize {
    config.n_elements
}

/// Writes one row per site, layers in altitude order, sites in grid order.
pub fn write_sites_csv(path: &Path, result: &SweepResult, n_sigma: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let labels: Vec<String> = result.criteria.iter().map(CriterionSpec::label).collect();

    let mut header: Vec<String> = ["x", "y", "z", "flag", "rssi_dbm"].map(String::from).to_vec();
    header.extend((1..=n_sigma).map(|i| format!("sigma{i}")));
    header.extend(labels.iter().map(|l| format!("rank_{l}")));
    header.push("cn_db".into());
    header.extend(labels.iter().map(|l| format!("cn_db_{l}")));
    w.write_record(&header)?;

    for layer in &result.layers {
        for site in &layer.sites {
            w.write_record(site_record(site, n_sigma, labels.len()))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn site_record(site: &SiteResult, n_sigma: usize, n_criteria: usize) -> Vec<String> {
    let p = site.position;
    let mut rec = vec![
        fmt_f64(p.x),
        fmt_f64(p.y),
        fmt_f64(p.z),
        site.coverage.label().to_string(),
        fmt_opt(site.rssi_dbm),
    ];
    let sigma = site.spectrum.as_ref().map(|s| s.sigma()).unwrap_or(&[]);
    rec.extend((0..n_sigma).map(|i| fmt_opt(sigma.get(i).copied())));
    rec.extend((0..n_criteria).map(|c| site.outcomes.get(c).map(|o| o.rank.to_string()).unwrap_or_default()));
    rec.push(fmt_opt(site.cn_db));
    rec.extend((0..n_criteria).map(|c| fmt_opt(site.outcomes.get(c).and_then(|o| o.cn_db))));
    rec
}

/// Empirical CDFs over covered sites, per altitude.
///
/// The `criterion` column names the metric: `rssi`, `cn`, `rank:<label>`
/// or `cn:<label>`.
pub fn write_cdf_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["criterion", "altitude_m", "breakpoint", "probability"])?;
    for layer in &result.layers {
        let covered: Vec<&SiteResult> = layer.sites.iter().filter(|s| s.coverage == Coverage::Covered).collect();
        let mut series: Vec<(String, Vec<f64>)> = vec![
            ("rssi".into(), covered.iter().filter_map(|s| s.rssi_dbm).collect()),
            ("cn".into(), covered.iter().filter_map(|s| s.cn_db).collect()),
        ];
        for (c, spec) in result.criteria.iter().enumerate() {
            let outcomes: Vec<_> = covered.iter().filter_map(|s| s.outcomes.get(c)).collect();
            series.push((format!("rank:{}", spec.label()), outcomes.iter().map(|o| o.rank as f64).collect()));
            series.push((format!("cn:{}", spec.label()), outcomes.iter().filter_map(|o| o.cn_db).collect()));
        }
        let alt = fmt_f64(layer.altitude_m);
        for (name, values) in series {
            let e = ecdf(&values);
            for (b, p) in e.breakpoints.iter().zip(&e.probabilities) {
                w.write_record([name.as_str(), alt.as_str(), &fmt_f64(*b), &fmt_f64(*p)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Value of one heatmap cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Undefined,
    NoCoverage,
    InBuilding,
}

/// Colour range actually used for a heatmap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapScale {
    pub layer: String,
    pub altitude_m: f64,
    pub file: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

fn viridis(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    std::array::from_fn(|k| (a[k] + (b[k] - a[k]) * f).round() as u8)
}

/// Renders `cells` (row-major, north index outer) as a PNG with north up.
///
/// Each cell becomes a `cell_px` square. Returns the value range mapped onto
/// the colour ramp, or `None` when no cell carries a value.
pub fn render_heatmap(cells: &[Cell], nx: usize, ny: usize, cell_px: u32) -> Result<(RgbImage, Option<(f64, f64)>)> {
    if cells.len() != nx * ny || nx == 0 || ny == 0 || cell_px == 0 {
        return Err(Error::Domain(format!("heatmap: {} cells for a {nx}x{ny} grid", cells.len())));
    }
    let range = cells
        .iter()
        .filter_map(|c| match c {
            Cell::Value(v) if v.is_finite() => Some(*v),
            _ => None,
        })
        .fold(None, |acc: Option<(f64, f64)>, v| Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v)))));
    let color = |c: &Cell| match *c {
        Cell::NoCoverage => COLOR_NO_COVERAGE,
        Cell::InBuilding => COLOR_IN_BUILDING,
        Cell::Value(v) if v.is_finite() => {
            let (lo, hi) = range.expect("finite value implies a range");
            viridis(if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
        }
        _ => COLOR_UNDEFINED,
    };
    let (w, h) = (nx as u32 * cell_px, ny as u32 * cell_px);
    let img = RgbImage::from_fn(w, h, |px, py| {
        let ix = (px / cell_px) as usize;
        let iy = ny - 1 - (py / cell_px) as usize;
        Rgb(color(&cells[iy * nx + ix]))
    });
    Ok((img, range))
}

fn coverage_cell(site: &SiteResult, value: impl Fn(&SiteResult) -> Option<f64>) -> Cell {
    match site.coverage {
        Coverage::NoCoverage => Cell::NoCoverage,
        Coverage::InBuilding => Cell::InBuilding,
        Coverage::Covered => value(site).map_or(Cell::Undefined, Cell::Value),
    }
}

/// Writes RSSI, raw CN and per-criterion rank heatmaps for every altitude.
pub fn write_heatmaps(out_dir: &Path, result: &SweepResult, cell_px: u32) -> Result<Vec<HeatmapScale>> {
    let (nx, ny) = (result.grid.nx(), result.grid.ny());
    let mut scales = Vec::new();
    for layer in &result.layers {
        let mut maps: Vec<(String, Vec<Cell>)> = vec![
            ("rssi".into(), layer.sites.iter().map(|s| coverage_cell(s, |s| s.rssi_dbm)).collect()),
            ("cn".into(), layer.sites.iter().map(|s| coverage_cell(s, |s| s.cn_db)).collect()),
        ];
        for (c, spec) in result.criteria.iter().enumerate() {
            let cells = layer
                .sites
                .iter()
                .map(|s| coverage_cell(s, |s| s.outcomes.get(c).map(|o| o.rank as f64)))
                .collect();
            maps.push((format!("rank_{}", spec.label()), cells));
        }
        for (name, cells) in maps {
            let (img, range) = render_heatmap(&cells, nx, ny, cell_px)?;
            let file = format!("heatmap_alt{}_{name}.png", altitude_tag(layer.altitude_m));
            img.save(out_dir.join(&file))?;
            scales.push(HeatmapScale {
                layer: name,
                altitude_m: layer.altitude_m,
                file,
                min: range.map(|r| r.0),
                max: range.map(|r| r.1),
            });
        }
    }
    Ok(scales)
}

/// Writes `sites.csv`, `cdf.csv` and the heatmaps.
pub fn write_all(out_dir: &Path, config: &ScenarioConfig, result: &SweepResult) -> Result<Vec<HeatmapScale>> {
    write_sites_csv(&out_dir.join("sites.csv"), result, sigma_columns(config))?;
    write_cdf_csv(&out_dir.join("cdf.csv"), result)?;
    write_heatmaps(out_dir, result, config.heatmap_cell_px)
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionSummary {
    pub criterion: String,
    pub rank_counts: Vec<usize>,
    pub p_rank: Vec<f64>,
    pub p_r1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerSummary {
    pub altitude_m: f64,
    pub n_sites: usize,
    pub n_covered: usize,
    pub n_z: usize,
    pub n_b: usize,
    pub p_z: f64,
    pub p_b: f64,
    pub mean_thresholds: Option<Vec<f64>>,
    pub criteria: Vec<CriterionSummary>,
}

/// Run metadata written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub scenario: ScenarioReport,
    pub criteria: Vec<String>,
    pub workers: usize,
    pub layers: Vec<LayerSummary>,
    pub heatmaps: Vec<HeatmapScale>,
    pub files: Vec<PathBuf>,
    pub timings: Timings,
}

impl Manifest {
    pub fn new(
        scenario: &ScenarioReport,
        result: &SweepResult,
        heatmaps: Vec<HeatmapScale>,
        timings: Timings,
        workers: usize,
    ) -> Self {
        let layers = result
            .layers
            .iter()
            .map(|l| {
                let s = &l.stats;
                LayerSummary {
                    altitude_m: l.altitude_m,
                    n_sites: s.n_total,
                    n_covered: s.n_total - s.n_z - s.n_b,
                    n_z: s.n_z,
                    n_b: s.n_b,
                    p_z: s.p_z(),
                    p_b: s.p_b(),
                    mean_thresholds: l.mean_thresholds.clone(),
                    criteria: result
                        .criteria
                        .iter()
                        .enumerate()
                        .map(|(c, spec)| CriterionSummary {
                            criterion: spec.label(),
                            rank_counts: s.rank_counts[c].clone(),
                            p_rank: (0..s.rank_counts[c].len()).map(|r| s.p_rank(c, r)).collect(),
                            p_r1: s.p_r1(c),
                        })
                        .collect(),
                }
            })
            .collect();
        let mut files: Vec<PathBuf> = vec!["sites.csv".into(), "cdf.csv".into()];
        files.extend(heatmaps.iter().map(|h| PathBuf::from(&h.file)));
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.clone(),
            criteria: result.criteria.iter().map(CriterionSpec::label).collect(),
            workers,
            layers,
            heatmaps,
            files,
            timings,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, manifest).map_err(|e| Error::Domain(format!("manifest: {e}")))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_colours_are_distinct_from_the_ramp() {
        for i in 0..=100 {
            let c = viridis(i as f64 / 100.0);
            assert!(c != COLOR_NO_COVERAGE && c != COLOR_IN_BUILDING && c != COLOR_UNDEFINED);
        }
    }

    #[test]
    fn heatmap_is_north_up_with_reserved_colours() {
        // 2x2: south row (iy=0) then north row (iy=1)
        let cells = [Cell::Value(0.0), Cell::NoCoverage, Cell::InBuilding, Cell::Value(1.0)];
        let (img, range) = render_heatmap(&cells, 2, 2, 3).unwrap();
        assert_eq!((img.width(), img.height()), (6, 6));
        assert_eq!(range, Some((0.0, 1.0)));
        assert_eq!(img.get_pixel(0, 0).0, COLOR_IN_BUILDING);
        assert_eq!(img.get_pixel(5, 0).0, viridis(1.0));
        assert_eq!(img.get_pixel(0, 5).0, viridis(0.0));
        assert_eq!(img.get_pixel(5, 5).0, COLOR_NO_COVERAGE);
    }

    #[test]
    fn constant_layer_maps_to_one_colour() {
        let cells = [Cell::Value(2.0), Cell::Value(2.0), Cell::Undefined];
        let (img, range) = render_heatmap(&cells, 3, 1, 1).unwrap();
        assert_eq!(range, Some((2.0, 2.0)));
        assert_eq!(img.get_pixel(0, 0), img.get_pixel(1, 0));
        assert_eq!(img.get_pixel(2, 0).0, COLOR_UNDEFINED);
    }

    #[test]
    fn all_uncovered_layer_has_no_range() {
        let (_, range) = render_heatmap(&[Cell::NoCoverage; 4], 2, 2, 1).unwrap();
        assert_eq!(range, None);
        assert!(render_heatmap(&[Cell::NoCoverage; 3], 2, 2, 1).is_err());
    }

    #[test]
    fn number_formatting_is_round_trip() {
        assert_eq!(fmt_f64(30.0), "30");
        assert_eq!(fmt_f64(-43.08), "-43.08");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(altitude_tag(2.5), "2p5");
        let v = 0.1 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
