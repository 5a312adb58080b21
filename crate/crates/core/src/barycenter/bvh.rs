//! Nearest point on a triangle soup through an axis-aligned bounding-box tree.

use crate::geom::{add, dot3, scale, sub, Vec3};

const LEAF: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }

    fn grow(&mut self, p: Vec3) {
        for ((lo, hi), x) in self.lo.iter_mut().zip(self.hi.iter_mut()).zip(p) {
            *lo = lo.min(x);
            *hi = hi.max(x);
        }
    }

    fn distance_sq(&self, p: Vec3) -> f64 {
        (0..3)
            .map(|k| {
                let d = (self.lo[k] - p[k]).max(p[k] - self.hi[k]).max(0.0);
                d * d
            })
            .sum()
    }
}

enum Node {
    Leaf { bounds: Aabb, first: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

pub(crate) struct TriangleTree {
    corners: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// One triangle within the tie window of the nearest distance.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Hit {
    pub triangle: usize,
    pub point: Vec3,
    pub barycentric: [f64; 3],
    pub distance: f64,
}

impl TriangleTree {
    pub fn new(positions: &[Vec3], triangles: &[[usize; 3]]) -> Self {
        let corners: Vec<[Vec3; 3]> =
            triangles.iter().map(|t| [positions[t[0]], positions[t[1]], positions[t[2]]]).collect();
        let mut order: Vec<usize> = (0..corners.len()).collect();
        let centroids: Vec<Vec3> =
            corners.iter().map(|c| scale(add(add(c[0], c[1]), c[2]), 1.0 / 3.0)).collect();
        let mut nodes = Vec::with_capacity(2 * corners.len() / LEAF + 1);
        build(&corners, &centroids, &mut order, 0, corners.len(), &mut nodes);
        Self { corners, order, nodes }
    }

    /// All triangles whose distance to `p` is within `window` of the minimum.
    pub fn nearest(&self, p: Vec3, window: f64) -> Vec<Hit> {
        let mut best = f64::INFINITY;
        let mut hits: Vec<Hit> = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let bound = node.bounds().distance_sq(p).sqrt();
            if bound > best + window {
                continue;
            }
            match *node {
                Node::Leaf { first, count, .. } => {
                    for &t in &self.order[first..first + count] {
                        let (point, bary) = closest_on_triangle(p, self.corners[t]);
                        let d = sub(point, p);
                        let distance = dot3(d, d).sqrt();
                        if distance <= best + window {
                            best = best.min(distance);
                            hits.push(Hit { triangle: t, point, barycentric: bary, distance });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_sq(p);
                    let dr = self.nodes[right].bounds().distance_sq(p);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        hits.retain(|h| h.distance <= best + window);
        hits.sort_by_key(|h| h.triangle);
        hits
    }
}

fn build(
    corners: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    first: usize,
    count: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    for &t in &order[first..first + count] {
        corners[t].iter().for_each(|&c| bounds.grow(c));
    }
    let index = nodes.len();
    if count <= LEAF {
        nodes.push(Node::Leaf { bounds, first, count });
        return index;
    }
    let mut cb = Aabb::empty();
    for &t in &order[first..first + count] {
        cb.grow(centroids[t]);
    }
    let axis = (0..3).max_by(|&a, &b| (cb.hi[a] - cb.lo[a]).total_cmp(&(cb.hi[b] - cb.lo[b]))).unwrap();
    let half = count / 2;
    order[first..first + count].select_nth_unstable_by(half, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, first, count });
    let left = build(corners, centroids, order, first, half, nodes);
    let right = build(corners, centroids, order, first + half, count - half, nodes);
    nodes[index] = Node::Inner { bounds, left, right };
    index
}

/// Closest point of triangle `[a, b, c]` to `p`, with barycentric weights.
pub(crate) fn closest_on_triangle(p: Vec3, [a, b, c]: [Vec3; 3]) -> (Vec3, [f64; 3]) {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }
    let bp = sub(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (add(a, scale(ab, v)), [1.0 - v, v, 0.0]);
    }
    let cp = sub(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (add(a, scale(ac, w)), [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (add(b, scale(sub(c, b), w)), [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (add(a, add(scale(ab, v), scale(ac, w))), [1.0 - v - w, v, w])
}
