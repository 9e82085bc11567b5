//! 2D polygon helpers for building footprints.

use super::Vec2;

const EPS: f64 = 1e-9;

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Shoelace area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

pub fn centroid(ring: &[Vec2]) -> Vec2 {
    let n = ring.len();
    let mut c = Vec2::zeros();
    let mut a2 = 0.0;
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let w = p.x * q.y - q.x * p.y;
        a2 += w;
        c += (p + q) * w;
    }
    c / (3.0 * a2)
}

/// Drops a closing duplicate and consecutive repeated vertices.
pub fn clean_ring(ring: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(ring.len());
    for &p in ring {
        if out.last().is_none_or(|&q| (p - q).norm() > EPS) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= EPS {
        out.pop();
    }
    out
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    cross(a, b, p).abs() <= EPS * (b - a).norm().max(1.0)
        && p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Closed segment intersection, touching and collinear overlap included.
fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// True when no two non-adjacent edges touch and adjacent edges do not fold back.
pub fn is_simple(ring: &[Vec2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex only; reject a reversal along the same line
                let shared = if j == i + 1 { b } else { a };
                let (u, v) = if j == i + 1 { (a, d) } else { (b, c) };
                if cross(shared, u, v).abs() <= EPS && (u - shared).dot(&(v - shared)) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub fn is_convex(ring: &[Vec2]) -> bool {
    let n = ring.len();
    let sign = signed_area(ring).signum();
    (0..n).all(|i| cross(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]) * sign >= -EPS)
}

/// Strict interior test: points on the boundary are outside.
pub fn contains_strict(ring: &[Vec2], p: Vec2) -> bool {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if on_segment(p, a, b) {
            return false;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
pub fn ear_clip(ring: &[Vec2]) -> Vec<[Vec2; 3]> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < ring.len() * ring.len() {
        guard += 1;
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (ring[idx[(k + m - 1) % m]], ring[idx[k]], ring[idx[(k + 1) % m]]);
            if cross(a, b, c) <= EPS {
                return false;
            }
            idx.iter().all(|&j| {
                let p = ring[j];
                if p == a || p == b || p == c {
                    return true;
                }
                !(cross(a, b, p) >= -EPS && cross(b, c, p) >= -EPS && cross(c, a, p) >= -EPS)
            })
        });
        match ear {
            Some(k) => {
                let m = idx.len();
                tris.push([ring[idx[(k + m - 1) % m]], ring[idx[k]], ring[idx[(k + 1) % m]]]);
                idx.remove(k);
            }
            None => break,
        }
    }
    if idx.len() == 3 {
        tris.push([ring[idx[0]], ring[idx[1]], ring[idx[2]]]);
    }
    tris
}
