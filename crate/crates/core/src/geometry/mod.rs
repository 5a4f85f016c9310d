//! Rigid-body math, meshes, point clouds and pose metrics.

mod bvh;
mod cloud;
mod mesh;
mod metrics;
mod pose;
mod symmetry;

pub use bvh::{closest_point_on_triangle, MeshBvh};
pub use cloud::{PointCloud, SurfaceSamples};
pub use mesh::TriMesh;
pub use metrics::{geodesic_angle, mean_abs_euler_deg, rotation_distance, rotation_error, translation_error};
pub use pose::{pose_compose, transform_points, Pose};
pub use symmetry::{SymmetryGroup, SymmetrySpec};

pub type Vec3 = nalgebra::Vector3<f64>;
