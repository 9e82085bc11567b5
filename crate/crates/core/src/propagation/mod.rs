//! Specular path enumeration and received power.
//!
//! Paths are found with the image method: the transmitter is mirrored across
//! each candidate facet (and facet pair for second order), the mirrored source
//! is joined to the receiver, and the resulting reflection points are checked
//! against the facet polygons and for blockage along every segment. Over
//! planar facets this yields exactly the specular set a converged
//! shooting-and-bouncing-rays trace would receive, with no launch density or
//! reception sphere to tune.

mod fresnel;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{Facet, FacetId, Scene, Vec3};
use crate::{wavelength, Error, Result};

pub use fresnel::{complex_permittivity, fresnel_gamma, fresnel_pair, Polarization, EPSILON_0};

/// Highest supported reflection order.
pub const MAX_ORDER: usize = 2;

const FRONT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coverage {
    Covered,
    /// Outdoor site with no propagation path.
    #[serde(rename = "Z")]
    NoCoverage,
    /// Site inside a building.
    #[serde(rename = "B")]
    InBuilding,
}

impl Coverage {
    pub fn label(self) -> &'static str {
        match self {
            Coverage::Covered => "covered",
            Coverage::NoCoverage => "Z",
            Coverage::InBuilding => "B",
        }
    }
}

/// One specular propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PropPath {
    /// Interaction points from TX to RX, both ends included.
    pub points: Vec<Vec3>,
    /// Reflecting facets in traversal order.
    pub facets: Vec<FacetId>,
    pub length: f64,
    /// Unit propagation direction leaving the transmitter.
    pub dep_dir: Vec3,
    /// Unit propagation direction arriving at the receiver.
    pub arr_dir: Vec3,
    pub amplitude: Complex64,
}

impl PropPath {
    pub fn order(&self) -> usize {
        self.facets.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<PropPath>,
    pub coverage: Coverage,
}

impl PathSet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    pub max_order: usize,
    pub freq_hz: f64,
}

impl TraceSettings {
    pub fn new(max_order: usize, freq_hz: f64) -> Result<Self> {
        if max_order > MAX_ORDER {
            return Err(Error::Domain(format!("max reflection order is {MAX_ORDER}, got {max_order}")));
        }
        if !(freq_hz > 0.0) || !freq_hz.is_finite() {
            return Err(Error::Domain(format!("frequency must be > 0, got {freq_hz}")));
        }
        Ok(TraceSettings { max_order, freq_hz })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    #[default]
    Coherent,
    Incoherent,
}

/// Intersection of segment `a -> b` with the facet plane when the endpoints
/// lie strictly on opposite sides, `a` behind.
fn cross_plane(a: &Vec3, b: &Vec3, f: &Facet) -> Option<Vec3> {
    let da = f.signed_distance(a);
    let db = f.signed_distance(b);
    if !(da < -FRONT_EPS && db > FRONT_EPS) {
        return None;
    }
    let t = da / (da - db);
    Some(a + (b - a) * t)
}

/// All unblocked specular paths from `tx` to `rx` up to `settings.max_order`
/// reflections, ordered by reflection order then facet ids.
pub fn enumerate_paths(tx: &Vec3, rx: &Vec3, scene: &Scene, settings: &TraceSettings) -> Result<PathSet> {
    if (tx - rx).norm() == 0.0 {
        return Err(Error::Domain("transmitter and receiver coincide".into()));
    }
    if scene.is_inside_building(tx) {
        return Err(Error::Domain(format!("transmitter {tx:?} is inside a building")));
    }
    if scene.is_inside_building(rx) {
        return Ok(PathSet {
            paths: Vec::new(),
            coverage: Coverage::InBuilding,
        });
    }
    let mut paths = Vec::new();
    let mut push = |points: Vec<Vec3>, facets: Vec<FacetId>| {
        paths.push(make_path(points, facets, scene, settings.freq_hz));
    };

    if !scene.occluded(tx, rx, &[]) {
        push(vec![*tx, *rx], Vec::new());
    }

    if settings.max_order >= 1 {
        let facets = scene.facets();
        let front_tx: Vec<bool> = facets.iter().map(|f| f.signed_distance(tx) > FRONT_EPS).collect();
        let front_rx: Vec<bool> = facets.iter().map(|f| f.signed_distance(rx) > FRONT_EPS).collect();

        for f in facets.iter().filter(|f| front_tx[f.id.0] && front_rx[f.id.0]) {
            let image = f.mirror(tx);
            let Some(p) = cross_plane(&image, rx, f) else { continue };
            if !f.contains_planar(&p) {
                continue;
            }
            let ex = [f.id];
            if scene.occluded(tx, &p, &ex) || scene.occluded(&p, rx, &ex) {
                continue;
            }
            push(vec![*tx, p, *rx], vec![f.id]);
        }

        if settings.max_order >= 2 {
            for f1 in facets.iter().filter(|f| front_tx[f.id.0]) {
                let image1 = f1.mirror(tx);
                for f2 in scene.facing(f1.id).iter().map(|&id| scene.facet(id)) {
                    if !front_rx[f2.id.0] {
                        continue;
                    }
                    let image2 = f2.mirror(&image1);
                    let Some(p2) = cross_plane(&image2, rx, f2) else { continue };
                    if !f2.contains_planar(&p2) {
                        continue;
                    }
                    let Some(p1) = cross_plane(&image1, &p2, f1) else { continue };
                    if !f1.contains_planar(&p1) || f2.signed_distance(&p1) <= FRONT_EPS {
                        continue;
                    }
                    if scene.occluded(tx, &p1, &[f1.id])
                        || scene.occluded(&p1, &p2, &[f1.id, f2.id])
                        || scene.occluded(&p2, rx, &[f2.id])
                    {
                        continue;
                    }
                    push(vec![*tx, p1, p2, *rx], vec![f1.id, f2.id]);
                }
            }
        }
    }

    let coverage = if paths.is_empty() { Coverage::NoCoverage } else { Coverage::Covered };
    Ok(PathSet { paths, coverage })
}

fn make_path(points: Vec<Vec3>, facets: Vec<FacetId>, scene: &Scene, freq_hz: f64) -> PropPath {
    let length = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let n = points.len();
    let dep_dir = (points[1] - points[0]).normalize();
    let arr_dir = (points[n - 1] - points[n - 2]).normalize();
    let amplitude = path_amplitude(&points, &facets, scene, freq_hz);
    PropPath {
        points,
        facets,
        length,
        dep_dir,
        arr_dir,
        amplitude,
    }
}

/// Vertical unit polarization transverse to `k`.
fn vertical_polarization(k: &Vec3) -> Vec3 {
    let z = Vec3::z();
    let e = z - k * z.dot(k);
    if e.norm() > 1e-9 {
        e.normalize()
    } else {
        let x = Vec3::x();
        (x - k * x.dot(k)).normalize()
    }
}

/// Complex field ratio of a path:
/// `λ/(4π d) · Π Γ_i · exp(−j 2π d/λ)` over the unfolded length `d`.
///
/// The transmitter radiates vertical polarization. At each bounce the field
/// is split into components perpendicular and parallel to the plane of
/// incidence, each scaled by its Fresnel coefficient, and the per-bounce
/// factor is the projection of the reflected field onto the geometrically
/// propagated polarization. For perfect reflectors this factor is exactly −1.
pub fn path_amplitude(points: &[Vec3], facets: &[FacetId], scene: &Scene, freq_hz: f64) -> Complex64 {
    let lambda = wavelength(freq_hz);
    let length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let mut gain = Complex64::new(1.0, 0.0);
    let mut k_in = (points[1] - points[0]).normalize();
    let mut e = vertical_polarization(&k_in);
    for (i, id) in facets.iter().enumerate() {
        let facet = scene.facet(*id);
        let n = facet.normal();
        let k_out = (points[i + 2] - points[i + 1]).normalize();
        let cos_i = (-k_in.dot(n)).clamp(f64::MIN_POSITIVE, 1.0);
        let mut s = k_in.cross(n);
        if s.norm() < 1e-12 {
            // normal incidence: any transverse basis works, both coefficients agree
            s = e.cross(&k_in);
        }
        let s = s.normalize();
        let p_in = s.cross(&k_in);
        let p_out = k_out.cross(&s);
        let (es, ep) = (e.dot(&s), e.dot(&p_in));
        let (g_perp, g_par) = fresnel_pair(scene.material(facet), cos_i, freq_hz)
            .expect("incidence cosine and frequency validated by the tracer");
        gain *= g_perp * (es * es) + g_par * (ep * ep);
        e = (s * es + p_out * ep).normalize();
        k_in = k_out;
    }
    let spreading = lambda / (4.0 * std::f64::consts::PI * length);
    let cycles = (length / lambda).rem_euclid(1.0);
    gain * spreading * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * cycles)
}

/// Received power in dBm, or `None` for an empty path set.
///
/// Exact destructive cancellation in coherent mode yields `-inf`.
pub fn rssi(pathset: &PathSet, tx_power_w: f64, mode: SumMode) -> Option<f64> {
    if pathset.paths.is_empty() {
        return None;
    }
    let gain = match mode {
        SumMode::Coherent => pathset.paths.iter().map(|p| p.amplitude).sum::<Complex64>().norm_sqr(),
        SumMode::Incoherent => pathset.paths.iter().map(|p| p.amplitude.norm_sqr()).sum(),
    };
    Some(watts_to_dbm(tx_power_w * gain))
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}
