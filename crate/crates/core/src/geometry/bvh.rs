//! Bounding volume hierarchy over facet bounding boxes.

use super::Vec3;

const LEAF_SIZE: usize = 4;
const PAD: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        b.min -= Vec3::repeat(PAD);
        b.max += Vec3::repeat(PAD);
        b
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Parametric entry distance of the ray into the box within `[0, t_max]`.
    fn ray_entry(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            if dir[a] == 0.0 {
                if origin[a] < self.min[a] || origin[a] > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[a];
            let (mut near, mut far) = ((self.min[a] - origin[a]) * inv, (self.max[a] - origin[a]) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..boxes.len()).collect(),
        };
        if !boxes.is_empty() {
            bvh.build_node(boxes, 0, boxes.len());
        }
        bvh
    }

    fn build_node(&mut self, boxes: &[Aabb], start: usize, end: usize) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.union(&boxes[i]));
        let slot = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, count: end - start });
            return slot;
        }
        let centers = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &i| {
                let c = boxes[i].center();
                Aabb {
                    min: acc.min.inf(&c),
                    max: acc.max.sup(&c),
                }
            });
        let extent = centers.max - centers.min;
        let axis = extent.imax();
        // stable ordering keeps construction deterministic for equal centers
        self.order[start..end].sort_by(|&a, &b| {
            boxes[a].center()[axis]
                .total_cmp(&boxes[b].center()[axis])
                .then(a.cmp(&b))
        });
        let mid = start + (end - start) / 2;
        self.nodes.push(Node::Leaf { bounds, start, count: 0 });
        let left = self.build_node(boxes, start, mid);
        let right = self.build_node(boxes, mid, end);
        self.nodes[slot] = Node::Inner { bounds, left, right };
        slot
    }

    /// Nearest primitive hit along the ray. `hit` returns the ray parameter
    /// for primitive `i`, or `None`. Ties go to the lower primitive index.
    pub fn nearest(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        t_max: f64,
        hit: impl Fn(usize) -> Option<f64>,
    ) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let limit = best.map_or(t_max, |(_, t)| t);
            let node = &self.nodes[n];
            if node.bounds().ray_entry(origin, dir, limit).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    for &i in &self.order[start..start + count] {
                        if let Some(t) = hit(i) {
                            if t > t_max {
                                continue;
                            }
                            let better = match best {
                                None => true,
                                Some((bi, bt)) => t < bt || (t == bt && i < bi),
                            };
                            if better {
                                best = Some((i, t));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }

    /// True if `hit` accepts any primitive whose box the ray enters within `[0, t_max]`.
    pub fn any(&self, origin: &Vec3, dir: &Vec3, t_max: f64, hit: impl Fn(usize) -> bool) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds().ray_entry(origin, dir, t_max).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, count, .. } => {
                    if self.order[start..start + count].iter().any(|&i| hit(i)) {
                        return true;
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        false
    }
}
