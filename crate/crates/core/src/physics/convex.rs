//! Convex polytope proxies and support-function separation tests.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::geometry::{Pose, TriMesh};

const PARALLEL_TOL: f64 = 1e-9;

fn push_axis(axes: &mut Vec<Vector3<f64>>, v: Vector3<f64>) {
    let n = v.norm();
    if n < 1e-12 {
        return;
    }
    let u = v / n;
    if !axes.iter().any(|a| a.cross(&u).norm() < PARALLEL_TOL) {
        axes.push(u);
    }
}

/// Vertices, distinct face normals and distinct feature-edge directions of a
/// convex mesh. The mesh is assumed convex; its vertex hull is the proxy shape.
#[derive(Clone, Debug)]
pub struct ConvexProxy {
    vertices: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
    edges: Vec<Vector3<f64>>,
}

impl ConvexProxy {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut normals = Vec::new();
        let mut tri_normals = Vec::with_capacity(mesh.triangles().len());
        for i in 0..mesh.triangles().len() {
            let [a, b, c] = mesh.triangle(i);
            let n = (b - a).cross(&(c - a)).normalize();
            tri_normals.push(n);
            push_axis(&mut normals, n);
        }
        let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (i, t) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
        let mut keys: Vec<_> = edge_faces.keys().copied().collect();
        keys.sort_unstable();
        let mut edges = Vec::new();
        for key in keys {
            let faces = &edge_faces[&key];
            let coplanar = faces.len() == 2 && tri_normals[faces[0]].cross(&tri_normals[faces[1]]).norm() < 1e-9;
            if !coplanar {
                let v = mesh.vertices();
                push_axis(&mut edges, v[key.1 as usize] - v[key.0 as usize]);
            }
        }
        Self { vertices: mesh.vertices().to_vec(), normals, edges }
    }

    pub fn posed(&self, pose: &Pose) -> PosedProxy {
        PosedProxy {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            normals: self.normals.iter().map(|n| pose.transform_vector(n)).collect(),
            edges: self.edges.iter().map(|e| pose.transform_vector(e)).collect(),
        }
    }

    pub fn face_axes(&self) -> usize {
        self.normals.len()
    }

    pub fn edge_axes(&self) -> usize {
        self.edges.len()
    }
}

/// A proxy placed in the world frame.
#[derive(Clone, Debug)]
pub struct PosedProxy {
    pub vertices: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
    edges: Vec<Vector3<f64>>,
}

impl PosedProxy {
    #[inline]
    fn interval(&self, n: &Vector3<f64>) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                let d = v.dot(n);
                (lo.min(d), hi.max(d))
            })
    }

    pub fn min_z(&self) -> f64 {
        self.vertices.iter().map(|v| v.z).fold(f64::INFINITY, f64::min)
    }

    pub fn translate(&mut self, t: &Vector3<f64>) {
        for v in &mut self.vertices {
            *v += t;
        }
    }

    /// Candidate separating axes for the pair: face normals of both and edge cross products.
    fn axes<'a>(&'a self, other: &'a PosedProxy) -> impl Iterator<Item = Vector3<f64>> + 'a {
        self.normals
            .iter()
            .chain(other.normals.iter())
            .copied()
            .chain(self.edges.iter().flat_map(move |a| {
                other.edges.iter().filter_map(move |b| {
                    let c = a.cross(b);
                    let n = c.norm();
                    (n > 1e-9).then(|| c / n)
                })
            }))
    }
}

/// Minimum translation that separates `a` from `b`: depth and unit direction in
/// which to move `a`. `None` when the hulls are separated or only touching.
pub fn penetration(a: &PosedProxy, b: &PosedProxy) -> Option<(f64, Vector3<f64>)> {
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for n in a.axes(b) {
        let (amin, amax) = a.interval(&n);
        let (bmin, bmax) = b.interval(&n);
        let push_pos = bmax - amin;
        let push_neg = amax - bmin;
        let (depth, dir) = if push_pos < push_neg { (push_pos, n) } else { (push_neg, -n) };
        if depth <= 0.0 {
            return None;
        }
        if best.is_none_or(|(d, _)| depth < d) {
            best = Some((depth, dir));
        }
    }
    best
}

pub fn penetration_depth_posed(a: &PosedProxy, b: &PosedProxy) -> f64 {
    penetration(a, b).map_or(0.0, |(d, _)| d)
}

/// Range of `t` for which `a` translated by `t·dir` intersects `b` (touching included).
pub fn sweep_overlap(a: &PosedProxy, b: &PosedProxy, dir: &Vector3<f64>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for n in a.axes(b) {
        let (amin, amax) = a.interval(&n);
        let (bmin, bmax) = b.interval(&n);
        let s = dir.dot(&n);
        if s.abs() < 1e-12 {
            // touching faces parallel to the motion do not block it
            if amin >= bmax - 1e-9 || amax <= bmin + 1e-9 {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((bmin - amax) / s, (bmax - amin) / s);
        let (t0, t1) = if s > 0.0 { (t0, t1) } else { (t1, t0) };
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Penetration depth between the convex hulls of two posed meshes.
pub fn penetration_depth(a: (&TriMesh, Pose), b: (&TriMesh, Pose)) -> f64 {
    let pa = ConvexProxy::new(a.0).posed(&a.1);
    let pb = ConvexProxy::new(b.0).posed(&b.1);
    penetration_depth_posed(&pa, &pb)
}
