use nalgebra::Vector3;

use super::GridIndex;
use crate::geometry::{PointCloud, Pose};

/// Fraction of posed model points that have a segment point within `delta`.
pub fn lcp_indexed(model: &[Vector3<f64>], segment: &GridIndex, pose: &Pose, delta: f64) -> f64 {
    if model.is_empty() || segment.is_empty() {
        return 0.0;
    }
    let hits = model.iter().filter(|m| segment.any_within(&pose.transform_point(m), delta)).count();
    hits as f64 / model.len() as f64
}

pub fn lcp_score(model: &PointCloud, segment: &PointCloud, pose: &Pose, delta: f64) -> f64 {
    if segment.is_empty() {
        return 0.0;
    }
    let grid = GridIndex::new(&segment.points, delta);
    lcp_indexed(&model.points, &grid, pose, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{transform_points, TriMesh};
    use crate::registration::sample_model_cloud;
    use proptest::prelude::*;

    fn model() -> PointCloud {
        sample_model_cloud(&TriMesh::cuboid(0.1, 0.08, 0.06).unwrap(), 500, 1).unwrap()
    }

    #[test]
    fn examples() {
        let m = model();
        let pose = Pose::from_axis_angle(Vector3::new(1.0, 1.0, 0.0), 0.5, Vector3::new(0.2, 0.0, 0.4));
        let seg = transform_points(&pose, &m);
        assert_eq!(lcp_score(&m, &seg, &pose, 0.005), 1.0);
        let moved = transform_points(&Pose::from_translation(Vector3::new(0.5, 0.0, 0.0)), &seg);
        assert_eq!(lcp_score(&m, &moved, &pose, 0.005), 0.0);
        assert_eq!(lcp_score(&m, &PointCloud::default(), &pose, 0.005), 0.0);
    }

    #[test]
    fn half_occluded_matches_brute_force() {
        let m = model();
        let seg = PointCloud::new(m.points.iter().filter(|p| p.x > 0.0).copied().collect());
        // brute-force nearest neighbor count
        let hits = m
            .points
            .iter()
            .filter(|p| seg.points.iter().any(|q| (*p - q).norm() <= 0.005))
            .count();
        let expect = hits as f64 / m.len() as f64;
        assert!((lcp_score(&m, &seg, &Pose::identity(), 0.005) - expect).abs() < 1e-12);
        let visible = seg.len() as f64 / m.len() as f64;
        assert!(expect >= visible && expect < visible + 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn joint_rigid_motion_invariance(ax in -1.0f64..1.0, ay in -1.0f64..1.0, angle in 0.0f64..3.0, tx in -1.0f64..1.0) {
            let m = model();
            let pose = Pose::from_axis_angle(Vector3::new(0.0, 0.0, 1.0), 0.3, Vector3::new(0.01, 0.0, 0.0));
            let seg = PointCloud::new(m.points.iter().step_by(2).copied().collect());
            let g = Pose::from_axis_angle(Vector3::new(ax, ay, 0.5), angle, Vector3::new(tx, 0.2, -0.1));
            let a = lcp_score(&m, &seg, &pose, 0.005);
            let b = lcp_score(&m, &transform_points(&g, &seg), &g.compose(&pose), 0.005);
            prop_assert!((a - b).abs() <= 2.0 / m.len() as f64);
        }
    }
}
