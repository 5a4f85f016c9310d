use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Indexed triangle mesh in model coordinates (meters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[u32; 3]>,
}

impl AsRef<TriMesh> for TriMesh {
    fn as_ref(&self) -> &TriMesh {
        self
    }
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let n = vertices.len() as u32;
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&k| k >= n) {
                return Err(Error::InvalidMesh(format!("triangle {i} has an out-of-range index")));
            }
            let [a, b, c] = t.map(|k| vertices[k as usize]);
            if (b - a).cross(&(c - a)).norm() * 0.5 < MIN_TRIANGLE_AREA {
                return Err(Error::InvalidMesh(format!("triangle {i} is degenerate")));
            }
        }
        Ok(Self { vertices, triangles })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn triangle(&self, i: usize) -> [Vector3<f64>; 3] {
        self.triangles[i].map(|k| self.vertices[k as usize])
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Largest distance from the model origin to any vertex.
    pub fn radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Parses the `v`/`f` subset of Wavefront OBJ. Faces must be triangles.
    pub fn from_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                    if coords.len() != 3 {
                        return Err(Error::Parse(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                    }
                    vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx: Vec<u32> = parts
                        .map(|s| {
                            s.split('/')
                                .next()
                                .unwrap_or("")
                                .parse::<u32>()
                                .ok()
                                .filter(|&k| k >= 1)
                                .map(|k| k - 1)
                                .ok_or_else(|| Error::Parse(format!("line {}: bad face index '{s}'", lineno + 1)))
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() != 3 {
                        return Err(Error::Parse(format!("line {}: only triangular faces are supported", lineno + 1)));
                    }
                    triangles.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }

    /// Axis-aligned box centered at the origin.
    pub fn cuboid(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let (hx, hy, hz) = (dx / 2.0, dy / 2.0, dz / 2.0);
        let vertices = (0..8)
            .map(|i| {
                Vector3::new(
                    if i & 1 == 0 { -hx } else { hx },
                    if i & 2 == 0 { -hy } else { hy },
                    if i & 4 == 0 { -hz } else { hz },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        Self::new(vertices, triangles)
    }

    /// Right prism over a regular `sides`-gon with circumradius `radius`, axis along z,
    /// centered at the origin. The first vertex lies on +x.
    pub fn regular_prism(sides: usize, radius: f64, height: f64) -> Result<Self> {
        if sides < 3 {
            return Err(Error::InvalidMesh("prism needs at least 3 sides".into()));
        }
        let hz = height / 2.0;
        let mut vertices = Vec::with_capacity(2 * sides + 2);
        for z in [-hz, hz] {
            for k in 0..sides {
                let a = 2.0 * PI * k as f64 / sides as f64;
                vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
            }
        }
        let bottom_c = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, 0.0, -hz));
        let top_c = vertices.len() as u32;
        vertices.push(Vector3::new(0.0, 0.0, hz));
        let n = sides as u32;
        let mut triangles = Vec::with_capacity(4 * sides);
        for k in 0..n {
            let k1 = (k + 1) % n;
            triangles.push([bottom_c, k1, k]);
            triangles.push([top_c, n + k, n + k1]);
            triangles.push([k, k1, n + k1]);
            triangles.push([k, n + k1, n + k]);
        }
        Self::new(vertices, triangles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_area() {
        let m = TriMesh::cuboid(1.0, 2.0, 3.0).unwrap();
        assert_eq!(m.triangles().len(), 12);
        assert!((m.surface_area() - 22.0).abs() < 1e-12);
    }

    #[test]
    fn prism_area() {
        let m = TriMesh::regular_prism(4, 2f64.sqrt() / 2.0, 1.0).unwrap();
        // unit square cross-section: 2 caps + 4 unit sides
        assert!((m.surface_area() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn obj_round_trip_and_errors() {
        let m = TriMesh::cuboid(0.1, 0.2, 0.3).unwrap();
        let back = TriMesh::from_obj(&m.to_obj()).unwrap();
        assert_eq!(back.triangles(), m.triangles());
        assert!(TriMesh::from_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n").is_err());
        assert!(TriMesh::from_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n").is_err());
        assert!(TriMesh::from_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").is_err());
        let ok = TriMesh::from_obj("# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n").unwrap();
        assert_eq!(ok.triangles().len(), 1);
    }

    #[test]
    fn rejects_nonfinite() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::new(f64::NAN, 0.0, 0.0)];
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_err());
    }
}
