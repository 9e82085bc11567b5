//! Immutable 3D scene of extruded buildings over a flat ground plane.
//!
//! Buildings are prisms: one rectangular wall facet per footprint edge plus a
//! flat roof (ear-clipped into triangles when the footprint is concave). The
//! ground is a single horizontal facet at `z = 0` spanning the scene bounds.
//! All coordinates are local ENU meters.

mod bvh;
pub mod polygon;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::material::Material;
use crate::{Error, Result};
use bvh::{Aabb, Bvh};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Ray-origin guard against self-intersection after a reflection, meters.
pub const SELF_HIT_EPS: f64 = 1e-6;

const PLANE_TOL: f64 = 1e-9;
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds2 {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::Geometry(format!("empty bounds {min:?}..{max:?}")));
        }
        Ok(Bounds2 { min, max })
    }

    /// Rectangle of `width x depth` centered on the origin.
    pub fn centered(width: f64, depth: f64) -> Result<Self> {
        Self::new([-width / 2.0, -depth / 2.0], [width / 2.0, depth / 2.0])
    }

    pub fn include(&mut self, x: f64, y: f64) {
        self.min = [self.min[0].min(x), self.min[1].min(y)];
        self.max = [self.max[0].max(x), self.max[1].max(y)];
    }

    pub fn expand(&self, margin: f64) -> Self {
        Bounds2 {
            min: [self.min[0] - margin, self.min[1] - margin],
            max: [self.max[0] + margin, self.max[1] + margin],
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FacetId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FacetKind {
    Ground,
    Wall { building: usize },
    Roof { building: usize },
}

/// A planar convex polygon with an outward normal.
#[derive(Debug, Clone)]
pub struct Facet {
    pub id: FacetId,
    pub kind: FacetKind,
    vertices: Vec<Vec3>,
    normal: Vec3,
    offset: f64,
    // inward unit normals of each edge, within the facet plane
    edge_normals: Vec<Vec3>,
    material: usize,
}

impl Facet {
    /// Builds a facet from counter-clockwise vertices (seen from the normal side).
    fn new(id: FacetId, kind: FacetKind, vertices: Vec<Vec3>, material: usize) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!("facet {} has fewer than 3 vertices", id.0)));
        }
        // Newell's method
        let n = vertices.len();
        let mut newell = Vec3::zeros();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            newell.x += (a.y - b.y) * (a.z + b.z);
            newell.y += (a.z - b.z) * (a.x + b.x);
            newell.z += (a.x - b.x) * (a.y + b.y);
        }
        let area = newell.norm() * 0.5;
        if !(area > 1e-12) {
            return Err(Error::Geometry(format!("facet {} is degenerate (area {area})", id.0)));
        }
        let normal = newell / newell.norm();
        let offset = normal.dot(&vertices[0]);
        if let Some(v) = vertices.iter().find(|v| (normal.dot(v) - offset).abs() > PLANE_TOL) {
            return Err(Error::Geometry(format!("facet {} is not planar at {v:?}", id.0)));
        }
        let mut edge_normals = Vec::with_capacity(n);
        for i in 0..n {
            let e = vertices[(i + 1) % n] - vertices[i];
            let inward = normal.cross(&e);
            let len = inward.norm();
            if len == 0.0 {
                return Err(Error::Geometry(format!("facet {} has a zero-length edge", id.0)));
            }
            edge_normals.push(inward / len);
        }
        let facet = Facet {
            id,
            kind,
            vertices,
            normal,
            offset,
            edge_normals,
            material,
        };
        let convex = (0..n).all(|i| {
            facet
                .vertices
                .iter()
                .all(|v| (v - facet.vertices[i]).dot(&facet.edge_normals[i]) >= -EDGE_TOL)
        });
        if !convex {
            return Err(Error::Geometry(format!("facet {} is not convex", facet.id.0)));
        }
        Ok(facet)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    /// Signed distance of `p` from the facet plane, positive on the normal side.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Mirror image of `p` across the facet plane.
    pub fn mirror(&self, p: &Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point already on the facet plane lies inside the polygon (edges included).
    pub fn contains_planar(&self, p: &Vec3) -> bool {
        self.vertices
            .iter()
            .zip(&self.edge_normals)
            .all(|(v, en)| (p - v).dot(en) >= -EDGE_TOL)
    }

    fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }
}

/// Ray hit on a facet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
}

/// Smallest `t > SELF_HIT_EPS` with `origin + t·dir` inside `facet`.
pub fn ray_facet_intersect(origin: &Vec3, dir: &Vec3, facet: &Facet) -> Option<Hit> {
    let denom = facet.normal.dot(dir);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = -facet.signed_distance(origin) / denom;
    if !(t > SELF_HIT_EPS) {
        return None;
    }
    let point = origin + dir * t;
    facet.contains_planar(&point).then_some(Hit { t, point })
}

/// An extruded building: footprint polygon plus flat-roof height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Building {
    footprint: Vec<[f64; 2]>,
    pub height: f64,
}

impl Building {
    /// Validates and normalizes the footprint to counter-clockwise order.
    pub fn new(footprint: &[[f64; 2]], height: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::Geometry(format!("building height must be > 0, got {height}")));
        }
        let ring: Vec<Vec2> = footprint.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        let mut ring = polygon::clean_ring(&ring);
        if ring.len() < 3 {
            return Err(Error::Geometry("footprint needs at least 3 distinct vertices".into()));
        }
        if !polygon::is_simple(&ring) {
            return Err(Error::Geometry("footprint is self-intersecting".into()));
        }
        let area = polygon::signed_area(&ring);
        if area.abs() < 1e-9 {
            return Err(Error::Geometry("footprint has zero area".into()));
        }
        if area < 0.0 {
            ring.reverse();
        }
        Ok(Building {
            footprint: ring.iter().map(|p| [p.x, p.y]).collect(),
            height,
        })
    }

    pub fn footprint(&self) -> &[[f64; 2]] {
        &self.footprint
    }

    fn ring(&self) -> Vec<Vec2> {
        self.footprint.iter().map(|p| Vec2::new(p[0], p[1])).collect()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let c = polygon::centroid(&self.ring());
        [c.x, c.y]
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        polygon::contains_strict(&self.ring(), Vec2::new(x, y))
    }
}

/// Immutable scene; shareable across threads.
#[derive(Debug, Clone)]
pub struct Scene {
    facets: Vec<Facet>,
    buildings: Vec<Building>,
    rings: Vec<Vec<Vec2>>,
    materials: Vec<Material>,
    ground: Option<FacetId>,
    bounds: Option<Bounds2>,
    bvh: Bvh,
    facing: Vec<Vec<FacetId>>,
    max_height: f64,
}

#[derive(Debug, Clone)]
pub struct SceneBuilder {
    bounds: Bounds2,
    ground: Option<Material>,
    building_material: Material,
    buildings: Vec<Building>,
}

impl SceneBuilder {
    pub fn new(bounds: Bounds2) -> Self {
        SceneBuilder {
            bounds,
            ground: None,
            building_material: Material::perfect_reflector(),
            buildings: Vec::new(),
        }
    }

    pub fn ground(mut self, material: Material) -> Self {
        self.ground = Some(material);
        self
    }

    pub fn building_material(mut self, material: Material) -> Self {
        self.building_material = material;
        self
    }

    pub fn building(mut self, building: Building) -> Self {
        self.buildings.push(building);
        self
    }

    pub fn buildings(mut self, buildings: impl IntoIterator<Item = Building>) -> Self {
        self.buildings.extend(buildings);
        self
    }

    pub fn build(self) -> Result<Scene> {
        let mut materials = Vec::new();
        let mut facets = Vec::new();
        let mut ground = None;
        if let Some(g) = self.ground {
            g.validate()?;
            materials.push(g);
            let [x0, y0] = self.bounds.min;
            let [x1, y1] = self.bounds.max;
            let verts = vec![
                Vec3::new(x0, y0, 0.0),
                Vec3::new(x1, y0, 0.0),
                Vec3::new(x1, y1, 0.0),
                Vec3::new(x0, y1, 0.0),
            ];
            ground = Some(FacetId(0));
            facets.push(Facet::new(FacetId(0), FacetKind::Ground, verts, 0)?);
        }
        let bm = materials.len();
        if !self.buildings.is_empty() {
            self.building_material.validate()?;
            materials.push(self.building_material);
        }
        for (b, building) in self.buildings.iter().enumerate() {
            let ring = building.ring();
            let h = building.height;
            let n = ring.len();
            for i in 0..n {
                let (a, c) = (ring[i], ring[(i + 1) % n]);
                let verts = vec![
                    Vec3::new(a.x, a.y, 0.0),
                    Vec3::new(c.x, c.y, 0.0),
                    Vec3::new(c.x, c.y, h),
                    Vec3::new(a.x, a.y, h),
                ];
                let id = FacetId(facets.len());
                facets.push(Facet::new(id, FacetKind::Wall { building: b }, verts, bm)?);
            }
            let pieces: Vec<Vec<Vec2>> = if polygon::is_convex(&ring) {
                vec![ring.clone()]
            } else {
                polygon::ear_clip(&ring).into_iter().map(|t| t.to_vec()).collect()
            };
            for piece in pieces {
                let verts = piece.iter().map(|p| Vec3::new(p.x, p.y, h)).collect();
                let id = FacetId(facets.len());
                facets.push(Facet::new(id, FacetKind::Roof { building: b }, verts, bm)?);
            }
        }
        let boxes: Vec<Aabb> = facets.iter().map(Facet::aabb).collect();
        let bvh = Bvh::build(&boxes);
        let facing = facing_pairs(&facets);
        let max_height = self.buildings.iter().map(|b| b.height).fold(0.0, f64::max);
        let rings = self.buildings.iter().map(Building::ring).collect();
        Ok(Scene {
            facets,
            buildings: self.buildings,
            rings,
            materials,
            ground,
            bounds: Some(self.bounds),
            bvh,
            facing,
            max_height,
        })
    }
}

/// For each facet, the facets that can follow it in a two-bounce specular
/// sequence: each must have some part strictly in front of the other.
fn facing_pairs(facets: &[Facet]) -> Vec<Vec<FacetId>> {
    let in_front = |a: &Facet, b: &Facet| a.vertices.iter().any(|v| b.signed_distance(v) > PLANE_TOL);
    facets
        .iter()
        .map(|f1| {
            facets
                .iter()
                .filter(|f2| f2.id != f1.id && in_front(f1, f2) && in_front(f2, f1))
                .map(|f2| f2.id)
                .collect()
        })
        .collect()
}

impl Scene {
    /// A scene with no facets at all: free space.
    pub fn free_space() -> Self {
        Scene {
            facets: Vec::new(),
            buildings: Vec::new(),
            rings: Vec::new(),
            materials: Vec::new(),
            ground: None,
            bounds: None,
            bvh: Bvh::default(),
            facing: Vec::new(),
            max_height: 0.0,
        }
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, id: FacetId) -> &Facet {
        &self.facets[id.0]
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn material(&self, facet: &Facet) -> &Material {
        &self.materials[facet.material]
    }

    pub fn ground(&self) -> Option<FacetId> {
        self.ground
    }

    pub fn bounds(&self) -> Option<Bounds2> {
        self.bounds
    }

    pub fn max_building_height(&self) -> f64 {
        self.max_height
    }

    /// Facets that may follow `id` in a two-bounce path.
    pub fn facing(&self, id: FacetId) -> &[FacetId] {
        &self.facing[id.0]
    }

    /// Nearest facet hit along a ray, via the spatial index.
    pub fn nearest_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<(FacetId, Hit)> {
        self.bvh
            .nearest(origin, dir, f64::INFINITY, |i| {
                ray_facet_intersect(origin, dir, &self.facets[i]).map(|h| h.t)
            })
            .map(|(i, t)| (FacetId(i), Hit { t, point: origin + dir * t }))
    }

    /// Nearest facet hit by scanning every facet.
    pub fn nearest_hit_brute_force(&self, origin: &Vec3, dir: &Vec3) -> Option<(FacetId, Hit)> {
        let mut best: Option<(FacetId, Hit)> = None;
        for f in &self.facets {
            if let Some(h) = ray_facet_intersect(origin, dir, f) {
                if best.is_none_or(|(_, b)| h.t < b.t) {
                    best = Some((f.id, h));
                }
            }
        }
        best
    }

    /// Whether the open segment `(p, q)` crosses any facet not in `exclude`.
    pub fn occluded(&self, p: &Vec3, q: &Vec3, exclude: &[FacetId]) -> bool {
        // canonical endpoint order makes the test exactly symmetric
        let (a, b) = if lex_less(p, q) { (p, q) } else { (q, p) };
        let d = b - a;
        let len = d.norm();
        if len <= 2.0 * SELF_HIT_EPS {
            return false;
        }
        let dir = d / len;
        let t_end = len - SELF_HIT_EPS;
        self.bvh.any(a, &dir, t_end, |i| {
            !exclude.contains(&FacetId(i))
                && ray_facet_intersect(a, &dir, &self.facets[i]).is_some_and(|h| h.t < t_end)
        })
    }

    /// Strictly inside a footprint and `0 <= z < height`.
    pub fn is_inside_building(&self, p: &Vec3) -> bool {
        if p.z < 0.0 || p.z >= self.max_height {
            return false;
        }
        let xy = Vec2::new(p.x, p.y);
        self.buildings
            .iter()
            .zip(&self.rings)
            .any(|(b, ring)| p.z < b.height && polygon::contains_strict(ring, xy))
    }

    /// SHA-256 over the scene's defining data, hex encoded.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        for m in &self.materials {
            m.digest_bytes(&mut bytes);
        }
        bytes.push(self.ground.is_some() as u8);
        if let Some(b) = &self.bounds {
            for v in b.min.iter().chain(&b.max) {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        for b in &self.buildings {
            bytes.extend_from_slice(&(b.footprint.len() as u64).to_le_bytes());
            for p in &b.footprint {
                bytes.extend_from_slice(&p[0].to_bits().to_le_bytes());
                bytes.extend_from_slice(&p[1].to_bits().to_le_bytes());
            }
            bytes.extend_from_slice(&b.height.to_bits().to_le_bytes());
        }
        hex_digest(&bytes)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn lex_less(p: &Vec3, q: &Vec3) -> bool {
    (p.x, p.y, p.z)
        .partial_cmp(&(q.x, q.y, q.z))
        .is_some_and(|o| o.is_lt())
}
