use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavmimo::propagation::{enumerate_paths, TraceSettings};
use uavmimo::sweep;
use uavmimo::{Facet, Scene, Vec3};

/// Even-odd test in the facet plane, dropping the dominant normal axis.
fn inside(f: &Facet, p: &Vec3) -> bool {
    let n = f.normal();
    let drop = (0..3).max_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
    let (u, v) = match drop {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let vs = f.vertices();
    let mut c = false;
    for i in 0..vs.len() {
        let (a, b) = (vs[i], vs[(i + 1) % vs.len()]);
        if (a[v] > p[v]) != (b[v] > p[v]) {
            let x = a[u] + (p[v] - a[v]) * (b[u] - a[u]) / (b[v] - a[v]);
            if p[u] < x {
                c = !c;
            }
        }
    }
    c
}

fn plane_dist(f: &Facet, p: &Vec3) -> f64 {
    f.normal().dot(&(p - f.vertices()[0]))
}

fn mirror(f: &Facet, p: &Vec3) -> Vec3 {
    p - f.normal() * (2.0 * plane_dist(f, p))
}

fn hit_plane(f: &Facet, a: &Vec3, b: &Vec3) -> Option<Vec3> {
    let (da, db) = (plane_dist(f, a), plane_dist(f, b));
    if da * db >= 0.0 {
        return None;
    }
    Some(a + (b - a) * (da / (da - db)))
}

fn blocked(scene: &Scene, a: &Vec3, b: &Vec3, skip: &[usize]) -> bool {
    scene.facets().iter().enumerate().any(|(i, f)| {
        if skip.contains(&i) {
            return false;
        }
        let (da, db) = (plane_dist(f, a), plane_dist(f, b));
        if da * db >= 0.0 {
            return false;
        }
        let t = da / (da - db);
        let len = (b - a).norm();
        t * len > 1e-6 && (1.0 - t) * len > 1e-6 && inside(f, &(a + (b - a) * t))
    })
}

fn brute_force(scene: &Scene, tx: &Vec3, rx: &Vec3) -> BTreeSet<Vec<usize>> {
    let fs = scene.facets();
    let mut out = BTreeSet::new();
    if !blocked(scene, tx, rx, &[]) {
        out.insert(vec![]);
    }
    for (i, f) in fs.iter().enumerate() {
        if plane_dist(f, tx) <= 0.0 || plane_dist(f, rx) <= 0.0 {
            continue;
        }
        if let Some(p) = hit_plane(f, &mirror(f, tx), rx) {
            if inside(f, &p) && !blocked(scene, tx, &p, &[i]) && !blocked(scene, &p, rx, &[i]) {
                out.insert(vec![i]);
            }
        }
    }
    for (i, f1) in fs.iter().enumerate() {
        for (j, f2) in fs.iter().enumerate() {
            if i == j || plane_dist(f1, tx) <= 0.0 || plane_dist(f2, rx) <= 0.0 {
                continue;
            }
            let im1 = mirror(f1, tx);
            let im2 = mirror(f2, &im1);
            let Some(p2) = hit_plane(f2, &im2, rx) else { continue };
            let Some(p1) = hit_plane(f1, &im1, &p2) else { continue };
            if plane_dist(f2, &p1) <= 0.0 || !inside(f1, &p1) || !inside(f2, &p2) {
                continue;
            }
            if !blocked(scene, tx, &p1, &[i]) && !blocked(scene, &p1, &p2, &[i, j]) && !blocked(scene, &p2, rx, &[j]) {
                out.insert(vec![i, j]);
            }
        }
    }
    out
}

#[test]
fn image_method_matches_exhaustive_search_on_urban_canyon() {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/urban_canyon.toml");
    let prepared = sweep::prepare(&config).unwrap();
    let scene = &prepared.scene;
    let tx = prepared.loaded.config.tx_position();
    let settings = TraceSettings::new(2, 3.4e9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut compared, mut total_paths) = (0, 0);
    while compared < 150 {
        let alt = [3.0, 30.0, 70.0, 110.0][compared % 4];
        let rx = Vec3::new(rng.random_range(-290.0..290.0), rng.random_range(-230.0..230.0), alt);
        if scene.is_inside_building(&rx) {
            continue;
        }
        let fast: BTreeSet<Vec<usize>> = enumerate_paths(&tx, &rx, scene, &settings)
            .unwrap()
            .paths
            .iter()
            .map(|p| p.facets.iter().map(|f| f.0).collect())
            .collect();
        let slow = brute_force(scene, &tx, &rx);
        assert_eq!(fast, slow, "receiver {rx:?}");
        total_paths += fast.len();
        compared += 1;
    }
    assert!(total_paths > 150, "suspiciously few paths: {total_paths}");
}
