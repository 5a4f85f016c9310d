use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Unordered set of 3D points in a single frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|c| c.is_finite()))
    }

    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn diameter(&self) -> f64 {
        self.bounds().map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
    }
}

/// Model surface samples with outward normals.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSamples {
    pub cloud: PointCloud,
    pub normals: Vec<Vector3<f64>>,
}
