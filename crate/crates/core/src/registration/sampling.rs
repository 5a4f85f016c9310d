use nalgebra::Vector3;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SurfaceSamples, TriMesh};
use crate::seeds;

pub const MIN_MODEL_POINTS: usize = 100;

/// Area-weighted uniform surface samples with outward normals (convex meshes).
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<SurfaceSamples> {
    if n < MIN_MODEL_POINTS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_MODEL_POINTS} model points, got {n}")));
    }
    let ntri = mesh.triangles().len();
    let mut cumulative = Vec::with_capacity(ntri);
    let mut total = 0.0;
    for i in 0..ntri {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("mesh has zero surface area".into()));
    }
    let center = mesh.vertices().iter().sum::<Vector3<f64>>() / mesh.vertices().len() as f64;
    let mut rng = seeds::rng(seed);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let t = cumulative.partition_point(|c| *c < r).min(ntri - 1);
        let [a, b, c] = mesh.triangle(t);
        let (s1, s2) = (rng.random::<f64>().sqrt(), rng.random::<f64>());
        let p = a * (1.0 - s1) + b * (s1 * (1.0 - s2)) + c * (s1 * s2);
        let mut nrm = (b - a).cross(&(c - a)).normalize();
        if nrm.dot(&(p - center)) < 0.0 {
            nrm = -nrm;
        }
        points.push(p);
        normals.push(nrm);
    }
    Ok(SurfaceSamples { cloud: PointCloud::new(points), normals })
}

/// `n` area-weighted uniform samples of the mesh surface.
pub fn sample_model_cloud(mesh: &TriMesh, n: usize, seed: u64) -> Result<PointCloud> {
    Ok(sample_surface(mesh, n, seed)?.cloud)
}
