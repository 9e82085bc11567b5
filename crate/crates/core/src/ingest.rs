//! Building footprints from GeoJSON, local ENU projection, scenario config
//! and receiver grids.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::{hex_digest, Bounds2, Building, Scene, SceneBuilder, Vec3};
use crate::material::Material;
use crate::propagation::{SumMode, MAX_ORDER};
use crate::rankanalysis::{CriterionSpec, MeanPopulation};
use crate::{Error, Result};

/// Sphere radius used by the tangent-plane projection, meters.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Default building height per OSM level, meters.
pub const METERS_PER_LEVEL: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoOrigin {
    pub lat0: f64,
    pub lon0: f64,
}

impl GeoOrigin {
    pub fn new(lat0: f64, lon0: f64) -> Result<Self> {
        if !(lat0.abs() <= 90.0) || !(lon0.abs() <= 180.0) {
            return Err(Error::Config(format!("origin ({lat0}, {lon0}) out of range")));
        }
        Ok(GeoOrigin { lat0, lon0 })
    }
}

/// Equirectangular projection about `origin`: `(east, north)` in meters.
pub fn project_to_enu(lat: f64, lon: f64, origin: &GeoOrigin) -> (f64, f64) {
    let x = EARTH_RADIUS_M * origin.lat0.to_radians().cos() * (lon - origin.lon0).to_radians();
    let y = EARTH_RADIUS_M * (lat - origin.lat0).to_radians();
    (x, y)
}

/// Inverse of [`project_to_enu`]: `(lat, lon)` in degrees.
pub fn enu_to_geo(x: f64, y: f64, origin: &GeoOrigin) -> (f64, f64) {
    let lat = origin.lat0 + (y / EARTH_RADIUS_M).to_degrees();
    let lon = origin.lon0 + (x / (EARTH_RADIUS_M * origin.lat0.to_radians().cos())).to_degrees();
    (lat, lon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedFeature {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildingSet {
    pub buildings: Vec<Building>,
    pub rejected: Vec<RejectedFeature>,
}

fn number_like(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => {
            let s = s.trim();
            let s = s.strip_suffix('m').unwrap_or(s).trim();
            s.parse().ok()
        }
        _ => None,
    }
    .filter(|x: &f64| x.is_finite())
}

fn feature_id(feature: &Value, index: usize) -> String {
    match feature.get("id").or_else(|| feature.pointer("/properties/id")) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("#{index}"),
    }
}

fn ring_to_enu(ring: &Value, origin: &GeoOrigin) -> Option<Vec<[f64; 2]>> {
    ring.as_array()?
        .iter()
        .map(|pos| {
            let p = pos.as_array()?;
            let lon = p.first()?.as_f64()?;
            let lat = p.get(1)?.as_f64()?;
            let (x, y) = project_to_enu(lat, lon, origin);
            Some([x, y])
        })
        .collect()
}

/// Buildings from a GeoJSON FeatureCollection of Polygon/MultiPolygon
/// features carrying `height` (m) or `levels` / `building:levels`.
///
/// Only exterior rings are used. Features without a usable height or with an
/// invalid footprint are skipped and reported in [`BuildingSet::rejected`].
pub fn load_buildings(geojson: &[u8], origin: &GeoOrigin, meters_per_level: f64) -> Result<BuildingSet> {
    let doc: Value = serde_json::from_slice(geojson).map_err(|e| Error::GeoJson {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::InvalidGeoJson("top-level object is not a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidGeoJson("FeatureCollection has no `features` array".into()))?;

    let mut out = BuildingSet::default();
    for (index, feature) in features.iter().enumerate() {
        let id = feature_id(feature, index);
        let mut reject = |reason: String| {
            log::warn!("skipping feature {id}: {reason}");
            out.rejected.push(RejectedFeature { id: id.clone(), reason });
        };
        let props = feature.get("properties").unwrap_or(&Value::Null);
        let height = props.get("height").and_then(number_like).or_else(|| {
            props
                .get("levels")
                .or_else(|| props.get("building:levels"))
                .and_then(number_like)
                .map(|l| l * meters_per_level)
        });
        let Some(height) = height else {
            reject("no numeric `height` or `levels` property".into());
            continue;
        };
        let geometry = feature.get("geometry").unwrap_or(&Value::Null);
        let coords = geometry.get("coordinates");
        let polygons: Vec<&Value> = match (geometry.get("type").and_then(Value::as_str), coords) {
            (Some("Polygon"), Some(c)) => vec![c],
            (Some("MultiPolygon"), Some(Value::Array(ps))) => ps.iter().collect(),
            (kind, _) => {
                reject(format!("unsupported geometry {kind:?}"));
                continue;
            }
        };
        let mut built = Vec::new();
        let mut failure = None;
        for poly in polygons {
            let Some(ring) = poly.get(0).and_then(|r| ring_to_enu(r, origin)) else {
                failure = Some("malformed polygon coordinates".to_string());
                break;
            };
            match Building::new(&ring, height) {
                Ok(b) => built.push(b),
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        match failure {
            Some(reason) => reject(reason),
            None => out.buildings.extend(built),
        }
    }
    Ok(out)
}

/// Transmitter horizontal position as given in the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TxLocation {
    LatLon { lat: f64, lon: f64 },
    Enu { east: f64, north: f64 },
}

/// Validated scenario description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub origin: GeoOrigin,
    pub buildings_geojson: Option<PathBuf>,
    pub carrier_freq_hz: f64,
    pub tx_location: TxLocation,
    pub tx_height_m: f64,
    pub tx_power_w: f64,
    pub altitudes_m: Vec<f64>,
    pub grid_resolution_m: f64,
    pub area_width_m: f64,
    pub area_depth_m: f64,
    pub max_reflections: usize,
    pub n_elements: usize,
    pub d_tx_wavelengths: f64,
    pub d_rx_wavelengths: f64,
    pub tx_array_axis: Vec3,
    pub rx_array_axis: Vec3,
    pub ground_material: Option<Material>,
    pub building_material: Material,
    #[serde(serialize_with = "serialize_criteria")]
    pub rank_criteria: Vec<CriterionSpec>,
    pub rssi_sum_mode: SumMode,
    pub mean_population: MeanPopulation,
    pub meters_per_level: f64,
    pub heatmap_cell_px: u32,
}

fn serialize_criteria<S: serde::Serializer>(c: &[CriterionSpec], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(CriterionSpec::label))
}

/// On-disk schema. Units are part of the key names.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    origin_lat_deg: f64,
    origin_lon_deg: f64,
    buildings_geojson: Option<PathBuf>,
    #[serde(default = "default_freq")]
    carrier_freq_hz: f64,
    tx_lat_deg: Option<f64>,
    tx_lon_deg: Option<f64>,
    tx_east_m: Option<f64>,
    tx_north_m: Option<f64>,
    tx_height_m: f64,
    #[serde(default = "default_power")]
    tx_power_w: f64,
    #[serde(default = "default_altitudes")]
    altitudes_m: Vec<f64>,
    #[serde(default = "default_resolution")]
    grid_resolution_m: f64,
    area_width_m: f64,
    area_depth_m: f64,
    #[serde(default = "default_reflections")]
    max_reflections: usize,
    #[serde(default = "default_elements")]
    n_elements: usize,
    #[serde(default = "default_d_tx")]
    d_tx_wavelengths: f64,
    #[serde(default = "default_d_rx")]
    d_rx_wavelengths: f64,
    #[serde(default = "default_axis")]
    tx_array_axis: [f64; 3],
    #[serde(default = "default_axis")]
    rx_array_axis: [f64; 3],
    #[serde(default = "default_ground")]
    ground_material: String,
    ground_rel_permittivity: Option<f64>,
    ground_conductivity_s_per_m: Option<f64>,
    #[serde(default = "default_building")]
    building_material: String,
    building_rel_permittivity: Option<f64>,
    building_conductivity_s_per_m: Option<f64>,
    #[serde(default = "default_criteria")]
    rank_criteria: Vec<String>,
    #[serde(default)]
    rssi_sum_mode: SumMode,
    #[serde(default)]
    mean_population: MeanPopulation,
    #[serde(default = "default_mpl")]
    meters_per_level: f64,
    #[serde(default = "default_cell_px")]
    heatmap_cell_px: u32,
}

fn default_freq() -> f64 {
    3.4e9
}
fn default_power() -> f64 {
    10.0
}
fn default_altitudes() -> Vec<f64> {
    vec![3.0, 30.0, 70.0, 110.0]
}
fn default_resolution() -> f64 {
    20.0
}
fn default_reflections() -> usize {
    2
}
fn default_elements() -> usize {
    4
}
fn default_d_tx() -> f64 {
    1.0
}
fn default_d_rx() -> f64 {
    0.5
}
fn default_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_ground() -> String {
    "perfect_reflector".into()
}
fn default_building() -> String {
    "concrete".into()
}
fn default_criteria() -> Vec<String> {
    ["k:10", "k:100", "k:10000", "mean"].map(String::from).to_vec()
}
fn default_mpl() -> f64 {
    METERS_PER_LEVEL
}
fn default_cell_px() -> u32 {
    8
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("`{name}` must be > 0, got {v}")))
    }
}

fn resolve_material(
    kind: &str,
    name: &str,
    eps: Option<f64>,
    sigma: Option<f64>,
    freq: f64,
) -> Result<Material> {
    let mut m = Material::named(name, freq).map_err(|e| Error::Config(format!("{kind}_material: {e}")))?;
    if eps.is_some() || sigma.is_some() {
        if m.perfect_reflector {
            return Err(Error::Config(format!("{kind}: perfect_reflector takes no electrical overrides")));
        }
        m = Material::new(name, eps.unwrap_or(m.rel_permittivity), sigma.unwrap_or(m.conductivity))
            .map_err(|e| Error::Config(format!("{kind}: {e}")))?;
    }
    Ok(m)
}

impl ScenarioConfig {
    /// Parses and validates a TOML scenario. Relative GeoJSON paths resolve
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let origin = GeoOrigin::new(raw.origin_lat_deg, raw.origin_lon_deg)?;
        let freq = positive("carrier_freq_hz", raw.carrier_freq_hz)?;
        let tx_location = match (raw.tx_lat_deg, raw.tx_lon_deg, raw.tx_east_m, raw.tx_north_m) {
            (Some(lat), Some(lon), None, None) => {
                GeoOrigin::new(lat, lon)?;
                TxLocation::LatLon { lat, lon }
            }
            (None, None, Some(east), Some(north)) if east.is_finite() && north.is_finite() => {
                TxLocation::Enu { east, north }
            }
            _ => {
                return Err(Error::Config(
                    "give the transmitter as either tx_lat_deg/tx_lon_deg or tx_east_m/tx_north_m".into(),
                ))
            }
        };
        let tx_height_m = positive("tx_height_m", raw.tx_height_m)?;
        let tx_power_w = positive("tx_power_w", raw.tx_power_w)?;
        if raw.altitudes_m.is_empty() {
            return Err(Error::Config("`altitudes_m` is empty".into()));
        }
        for (i, a) in raw.altitudes_m.iter().enumerate() {
            positive("altitudes_m", *a)?;
            if raw.altitudes_m[..i].contains(a) {
                return Err(Error::Config(format!("altitude {a} m is listed twice")));
            }
        }
        let res = positive("grid_resolution_m", raw.grid_resolution_m)?;
        let width = positive("area_width_m", raw.area_width_m)?;
        let depth = positive("area_depth_m", raw.area_depth_m)?;
        if width < res || depth < res {
            return Err(Error::Config(format!(
                "grid resolution {res} m leaves fewer than 2 points across {width} x {depth} m"
            )));
        }
        if raw.max_reflections > MAX_ORDER {
            return Err(Error::Config(format!(
                "max_reflections must be in 0..={MAX_ORDER}, got {}",
                raw.max_reflections
            )));
        }
        if raw.n_elements == 0 {
            return Err(Error::Config("`n_elements` must be >= 1".into()));
        }
        let axis = |name: &str, a: [f64; 3]| -> Result<Vec3> {
            let v = Vec3::from(a);
            if !(v.norm() > 0.0) || !v.norm().is_finite() {
                return Err(Error::Config(format!("`{name}` must be a non-zero vector")));
            }
            Ok(v.normalize())
        };
        let ground_material = match raw.ground_material.as_str() {
            "none" => None,
            name => Some(resolve_material(
                "ground",
                name,
                raw.ground_rel_permittivity,
                raw.ground_conductivity_s_per_m,
                freq,
            )?),
        };
        let building_material = resolve_material(
            "building",
            &raw.building_material,
            raw.building_rel_permittivity,
            raw.building_conductivity_s_per_m,
            freq,
        )?;
        let rank_criteria = raw
            .rank_criteria
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<CriterionSpec>>>()?;
        if rank_criteria.is_empty() {
            return Err(Error::Config("`rank_criteria` is empty".into()));
        }
        let mut labels: Vec<String> = rank_criteria.iter().map(CriterionSpec::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != rank_criteria.len() {
            return Err(Error::Config("`rank_criteria` has duplicates".into()));
        }
        if raw.heatmap_cell_px == 0 {
            return Err(Error::Config("`heatmap_cell_px` must be >= 1".into()));
        }
        Ok(ScenarioConfig {
            name: raw.name.unwrap_or_else(|| "scenario".into()),
            origin,
            buildings_geojson: raw.buildings_geojson.map(|p| base_dir.join(p)),
            carrier_freq_hz: freq,
            tx_location,
            tx_height_m,
            tx_power_w,
            altitudes_m: raw.altitudes_m,
            grid_resolution_m: res,
            area_width_m: width,
            area_depth_m: depth,
            max_reflections: raw.max_reflections,
            n_elements: raw.n_elements,
            d_tx_wavelengths: positive("d_tx_wavelengths", raw.d_tx_wavelengths)?,
            d_rx_wavelengths: positive("d_rx_wavelengths", raw.d_rx_wavelengths)?,
            tx_array_axis: axis("tx_array_axis", raw.tx_array_axis)?,
            rx_array_axis: axis("rx_array_axis", raw.rx_array_axis)?,
            ground_material,
            building_material,
            rank_criteria,
            rssi_sum_mode: raw.rssi_sum_mode,
            mean_population: raw.mean_population,
            meters_per_level: positive("meters_per_level", raw.meters_per_level)?,
            heatmap_cell_px: raw.heatmap_cell_px,
        })
    }

    /// Transmitter position in the local ENU frame.
    pub fn tx_position(&self) -> Vec3 {
        let (x, y) = match self.tx_location {
            TxLocation::LatLon { lat, lon } => project_to_enu(lat, lon, &self.origin),
            TxLocation::Enu { east, north } => (east, north),
        };
        Vec3::new(x, y, self.tx_height_m)
    }

    pub fn area_bounds(&self) -> Bounds2 {
        Bounds2 {
            min: [-self.area_width_m / 2.0, -self.area_depth_m / 2.0],
            max: [self.area_width_m / 2.0, self.area_depth_m / 2.0],
        }
    }
}

/// A loaded scenario: config plus its raw bytes digest.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub digest: String,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Config(format!("{} is not valid UTF-8", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let config = ScenarioConfig::from_toml_str(&text, base)?;
    Ok(LoadedConfig {
        config,
        digest: hex_digest(&bytes),
    })
}

/// Buildings for a config: its GeoJSON, or none for an open field.
pub fn load_config_buildings(config: &ScenarioConfig) -> Result<BuildingSet> {
    match &config.buildings_geojson {
        None => Ok(BuildingSet::default()),
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            load_buildings(&bytes, &config.origin, config.meters_per_level)
        }
    }
}

/// Scene for a config. The ground plane extends one area diagonal past the
/// union of the target area, transmitter and buildings so that every ground
/// reflection point of a valid path lies on it.
pub fn build_scene(config: &ScenarioConfig, buildings: Vec<Building>) -> Result<Scene> {
    let mut bounds = config.area_bounds();
    let tx = config.tx_position();
    bounds.include(tx.x, tx.y);
    for b in &buildings {
        for p in b.footprint() {
            bounds.include(p[0], p[1]);
        }
    }
    let margin = config.area_width_m.hypot(config.area_depth_m);
    let mut builder = SceneBuilder::new(bounds.expand(margin))
        .building_material(config.building_material.clone())
        .buildings(buildings);
    if let Some(g) = &config.ground_material {
        builder = builder.ground(g.clone());
    }
    builder.build()
}

/// Uniform receiver grid centered on the ENU origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub altitudes: Vec<f64>,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn sites_per_layer(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Points of one altitude layer, row-major: north index outer, east inner.
    pub fn layer(&self, altitude: f64) -> Vec<Vec3> {
        self.ys
            .iter()
            .flat_map(|&y| self.xs.iter().map(move |&x| Vec3::new(x, y, altitude)))
            .collect()
    }

    pub fn layers(&self) -> Vec<Vec<Vec3>> {
        self.altitudes.iter().map(|&a| self.layer(a)).collect()
    }
}

fn axis_points(extent: f64, res: f64) -> Vec<f64> {
    let n = (extent / res + 1e-9).floor() as usize + 1;
    let start = -((n - 1) as f64) * res / 2.0;
    (0..n).map(|i| start + i as f64 * res).collect()
}

/// `floor(extent / resolution) + 1` points per axis, one layer per altitude.
pub fn build_grid(config: &ScenarioConfig) -> Grid {
    Grid {
        xs: axis_points(config.area_width_m, config.grid_resolution_m),
        ys: axis_points(config.area_depth_m, config.grid_resolution_m),
        altitudes: config.altitudes_m.clone(),
    }
}
