//! Axis-aligned bounding-box tree over mesh triangles for exact point-to-surface queries.

use nalgebra::Vector3;

use super::TriMesh;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    lo: Vector3<f64>,
    hi: Vector3<f64>,
    /// Leaf when `count > 0`: triangles `order[start..start + count]`.
    left: u32,
    right: u32,
    start: u32,
    count: u32,
}

/// Closest point on triangle `abc` to `p`.
pub fn closest_point_on_triangle(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

fn box_dist2(p: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> f64 {
    let mut d = 0.0;
    for k in 0..3 {
        let e = if p[k] < lo[k] {
            lo[k] - p[k]
        } else if p[k] > hi[k] {
            p[k] - hi[k]
        } else {
            0.0
        };
        d += e * e;
    }
    d
}

/// Bounding-volume hierarchy over a mesh, queried in model coordinates.
#[derive(Clone, Debug)]
pub struct MeshBvh {
    tris: Vec<[Vector3<f64>; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl MeshBvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vector3<f64>; 3]> = (0..mesh.triangles().len()).map(|i| mesh.triangle(i)).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::new();
        let n = order.len();
        build(&tris, &mut order, 0, n, &mut nodes);
        Self { tris, order, nodes }
    }

    /// Squared distance from `p` to the surface if below `best`, else `best`.
    fn nearest2(&self, p: &Vector3<f64>, mut best: f64) -> f64 {
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if box_dist2(p, &node.lo, &node.hi) >= best {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let [a, b, c] = &self.tris[t as usize];
                    let q = closest_point_on_triangle(p, a, b, c);
                    best = best.min((q - p).norm_squared());
                }
            } else {
                let (l, r) = (&self.nodes[node.left as usize], &self.nodes[node.right as usize]);
                let (dl, dr) = (box_dist2(p, &l.lo, &l.hi), box_dist2(p, &r.lo, &r.hi));
                if dl < dr {
                    stack.push(node.right);
                    stack.push(node.left);
                } else {
                    stack.push(node.left);
                    stack.push(node.right);
                }
            }
        }
        best
    }

    /// Exact unsigned distance from a model-frame point to the mesh surface.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.nearest2(p, f64::INFINITY).sqrt()
    }

    /// Whether the surface passes strictly closer than `eps` to `p`.
    pub fn within(&self, p: &Vector3<f64>, eps: f64) -> bool {
        self.nearest2(p, eps * eps) < eps * eps
    }
}

fn build(tris: &[[Vector3<f64>; 3]], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for &t in &order[start..end] {
        for v in &tris[t as usize] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
    }
    let idx = nodes.len() as u32;
    nodes.push(Node { lo, hi, left: 0, right: 0, start: start as u32, count: (end - start) as u32 });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let axis = (hi - lo).imax();
    let centroid = |t: u32| tris[t as usize].iter().map(|v| v[axis]).sum::<f64>();
    order[start..end].sort_by(|a, b| centroid(*a).total_cmp(&centroid(*b)));
    let mid = (start + end) / 2;
    let left = build(tris, order, start, mid, nodes);
    let right = build(tris, order, mid, end, nodes);
    let node = &mut nodes[idx as usize];
    node.left = left;
    node.right = right;
    node.count = 0;
    idx
}
