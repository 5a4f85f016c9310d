//! Quasi-static settling: projects a hypothesized pose to a nearby pose that
//! neither penetrates the table or already placed objects nor floats.

mod convex;

use nalgebra::{Unit, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use convex::{penetration, penetration_depth, penetration_depth_posed, sweep_overlap, ConvexProxy, PosedProxy};

use crate::geometry::{Pose, TriMesh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettleConfig {
    pub max_steps: usize,
    pub penetration_tolerance: f64,
    pub contact_tolerance: f64,
    pub step_translation_cap: f64,
    pub rotation_enabled: bool,
}

impl Default for SettleConfig {
    fn default() -> Self {
        Self {
            max_steps: 100,
            penetration_tolerance: 0.001,
            contact_tolerance: 0.002,
            step_translation_cap: 0.02,
            rotation_enabled: true,
        }
    }
}

const MAX_TILT_STEP: f64 = 2.0 * std::f64::consts::PI / 180.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettleResult {
    pub pose: Pose,
    pub steps: usize,
    /// Set when the post-conditions could not be met within `max_steps`.
    pub violation: bool,
}

/// Post-condition measurements for a settled pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettleCheck {
    /// Largest penetration into the table or any placed object.
    pub penetration: f64,
    /// Free fall distance along −z before first contact.
    pub support_gap: f64,
}

impl SettleCheck {
    pub fn satisfied(&self, cfg: &SettleConfig) -> bool {
        self.penetration <= cfg.penetration_tolerance && self.support_gap <= cfg.contact_tolerance
    }
}

fn worst_penetration(a: &PosedProxy, placed: &[PosedProxy], table_z: f64) -> Option<(f64, Vector3<f64>)> {
    let mut worst: Option<(f64, Vector3<f64>)> = None;
    let table = table_z - a.min_z();
    if table > 0.0 {
        worst = Some((table, Vector3::z()));
    }
    for b in placed {
        if let Some((d, dir)) = penetration(a, b) {
            if worst.is_none_or(|(w, _)| d > w) {
                worst = Some((d, dir));
            }
        }
    }
    worst
}

/// Distance `a` can fall along −z before touching the table or a placed object.
fn drop_distance(a: &PosedProxy, placed: &[PosedProxy], table_z: f64) -> f64 {
    let down = -Vector3::z();
    let mut gap = a.min_z() - table_z;
    for b in placed {
        if let Some((lo, hi)) = sweep_overlap(a, b, &down) {
            if hi > 0.0 {
                gap = gap.min(lo.max(0.0));
            }
        }
    }
    gap
}

pub fn check_settled(pose: &Pose, model: &ConvexProxy, placed: &[(&ConvexProxy, Pose)], table_z: f64) -> SettleCheck {
    let a = model.posed(pose);
    let others: Vec<PosedProxy> = placed.iter().map(|(h, p)| h.posed(p)).collect();
    SettleCheck {
        penetration: worst_penetration(&a, &others, table_z).map_or(0.0, |(d, _)| d),
        support_gap: drop_distance(&a, &others, table_z).max(0.0),
    }
}

pub(crate) fn convex_hull_2d(mut pts: Vec<Vector2<f64>>) -> Vec<Vector2<f64>> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| (a - o).perp(&(b - o));
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

fn closest_on_segment(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> Vector2<f64> {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return *a;
    }
    a + ab * ((p - a).dot(&ab) / l2).clamp(0.0, 1.0)
}

/// Nearest point of the support polygon to `p`, or `None` if `p` is inside it.
fn outside_support(p: &Vector2<f64>, hull: &[Vector2<f64>]) -> Option<Vector2<f64>> {
    match hull.len() {
        0 => None,
        1 => Some(hull[0]),
        2 => Some(closest_on_segment(p, &hull[0], &hull[1])),
        n => {
            let inside = (0..n).all(|i| (hull[(i + 1) % n] - hull[i]).perp(&(p - hull[i])) >= -1e-12);
            if inside {
                return None;
            }
            (0..n)
                .map(|i| closest_on_segment(p, &hull[i], &hull[(i + 1) % n]))
                .min_by(|a, b| (a - p).norm_squared().total_cmp(&(b - p).norm_squared()))
        }
    }
}

/// Small rotation that tips an object resting on too few support points
/// toward its center, or `None` when the center lies over the support polygon.
fn tilt_step(pose: &Pose, a: &PosedProxy, cfg: &SettleConfig) -> Option<Pose> {
    let zmin = a.min_z();
    let support: Vec<Vector2<f64>> = a
        .vertices
        .iter()
        .filter(|v| v.z <= zmin + cfg.contact_tolerance)
        .map(|v| Vector2::new(v.x, v.y))
        .collect();
    let hull = convex_hull_2d(support);
    let com = Vector2::new(pose.translation.x, pose.translation.y);
    let pivot = outside_support(&com, &hull)?;
    let d = com - pivot;
    if d.norm() < 1e-6 {
        return None;
    }
    let dir = d.normalize();
    let pivot3 = Vector3::new(pivot.x, pivot.y, zmin);
    // rotation that brings the next vertex on the falling side down to the support plane
    let needed = a
        .vertices
        .iter()
        .filter_map(|v| {
            let r = v - pivot3;
            let along = r.x * dir.x + r.y * dir.y;
            (along > 1e-9 && r.z > cfg.contact_tolerance).then(|| r.z.atan2(along))
        })
        .fold(f64::INFINITY, f64::min);
    let angle = needed.min(MAX_TILT_STEP);
    if !angle.is_finite() || angle < 1e-9 {
        return None;
    }
    let axis = Unit::new_normalize(Vector3::z().cross(&Vector3::new(dir.x, dir.y, 0.0)));
    let rot = UnitQuaternion::from_axis_angle(&axis, angle);
    let about_pivot = Pose::from_translation(pivot3)
        .compose(&Pose::from_rotation(rot))
        .compose(&Pose::from_translation(-pivot3));
    Some(about_pivot.compose(pose))
}

/// Projects `pose` to a supported, non-penetrating configuration. Placed objects never move.
pub fn settle_proxy(
    pose: &Pose,
    model: &ConvexProxy,
    placed: &[(&ConvexProxy, Pose)],
    table_z: f64,
    cfg: &SettleConfig,
) -> SettleResult {
    let others: Vec<PosedProxy> = placed.iter().map(|(h, p)| h.posed(p)).collect();
    let mut pose = *pose;
    let mut tilts = 0usize;
    for step in 0..cfg.max_steps.max(1) {
        let mut a = model.posed(&pose);
        if let Some((depth, dir)) = worst_penetration(&a, &others, table_z) {
            if depth > cfg.penetration_tolerance {
                let mv = dir * depth.min(cfg.step_translation_cap);
                pose.translation += mv;
                continue;
            }
        }
        let gap = drop_distance(&a, &others, table_z);
        if gap > 0.0 {
            let mv = Vector3::new(0.0, 0.0, -gap);
            pose.translation += mv;
            a.translate(&mv);
            if gap > cfg.contact_tolerance {
                continue;
            }
        }
        if cfg.rotation_enabled && tilts < cfg.max_steps / 2 {
            if let Some(next) = tilt_step(&pose, &a, cfg) {
                pose = next;
                tilts += 1;
                continue;
            }
        }
        let check = check_settled(&pose, model, placed, table_z);
        return SettleResult { pose, steps: step + 1, violation: !check.satisfied(cfg) };
    }
    let check = check_settled(&pose, model, placed, table_z);
    SettleResult { pose, steps: cfg.max_steps, violation: !check.satisfied(cfg) }
}

/// Mesh-level entry point; builds convex proxies on the fly.
pub fn settle(pose: &Pose, model: &TriMesh, placed: &[(&TriMesh, Pose)], table_z: f64, cfg: &SettleConfig) -> SettleResult {
    let proxy = ConvexProxy::new(model);
    let hulls: Vec<ConvexProxy> = placed.iter().map(|(m, _)| ConvexProxy::new(m)).collect();
    let refs: Vec<(&ConvexProxy, Pose)> = hulls.iter().zip(placed).map(|(h, (_, p))| (h, *p)).collect();
    settle_proxy(pose, &proxy, &refs, table_z, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube() -> TriMesh {
        TriMesh::cuboid(0.1, 0.1, 0.1).unwrap()
    }

    fn at(x: f64, y: f64, z: f64) -> Pose {
        Pose::from_translation(Vector3::new(x, y, z))
    }

    #[test]
    fn free_fall_to_table() {
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.3);
        let start = Pose::new(rot, Vector3::new(0.0, 0.0, 0.1));
        let r = settle(&start, &cube(), &[], 0.0, &SettleConfig::default());
        assert!(!r.violation);
        assert!((r.pose.translation.z - 0.05).abs() < 1e-9);
        assert!(r.pose.rotation.angle_to(&rot) < 1e-12);
    }

    #[test]
    fn pushed_out_of_table() {
        let r = settle(&at(0.0, 0.0, 0.04), &cube(), &[], 0.0, &SettleConfig::default());
        assert!(!r.violation);
        assert!((r.pose.translation.z - 0.05).abs() <= 0.002);
    }

    #[test]
    fn half_overlapping_cube() {
        let c = cube();
        let base = at(0.0, 0.0, 0.05);
        let cfg = SettleConfig::default();
        let r = settle(&at(0.05, 0.0, 0.06), &c, &[(&c, base)], 0.0, &cfg);
        assert!(!r.violation);
        let proxy = ConvexProxy::new(&c);
        let check = check_settled(&r.pose, &proxy, &[(&proxy, base)], 0.0);
        assert!(check.satisfied(&cfg), "{check:?}");
        let z = r.pose.translation.z;
        assert!((z - 0.15).abs() < 0.003 || (z - 0.05).abs() < 0.003, "{:?} {}", r.pose, r.steps);
    }

    #[test]
    fn tilted_box_lies_flat() {
        let b = TriMesh::cuboid(0.1, 0.06, 0.04).unwrap();
        let tilt = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 10f64.to_radians());
        let r = settle(&Pose::new(tilt, Vector3::new(0.0, 0.0, 0.2)), &b, &[], 0.0, &SettleConfig::default());
        assert!(!r.violation);
        let up = r.pose.transform_vector(&Vector3::z());
        assert!(up.z > 0.9999, "{up:?}");
        let flat = settle(
            &Pose::new(tilt, Vector3::new(0.0, 0.0, 0.2)),
            &b,
            &[],
            0.0,
            &SettleConfig { rotation_enabled: false, ..Default::default() },
        );
        assert!(flat.pose.rotation.angle_to(&tilt) < 1e-12);
    }

    #[test]
    fn placed_objects_untouched_and_deterministic() {
        let c = cube();
        let placed = vec![(&c, at(0.0, 0.0, 0.05))];
        let before = placed.clone();
        let a = settle(&at(0.02, 0.01, 0.3), &c, &placed, 0.0, &SettleConfig::default());
        let b = settle(&at(0.02, 0.01, 0.3), &c, &placed, 0.0, &SettleConfig::default());
        assert_eq!(a, b);
        assert_eq!(placed[0].1, before[0].1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn postconditions_and_idempotence(x in -0.12f64..0.12, y in -0.12f64..0.12, z in 0.0f64..0.3,
                                          yaw in 0.0f64..6.3, tilt in 0.0f64..0.4) {
            let c = cube();
            let prism = TriMesh::regular_prism(6, 0.05, 0.08).unwrap();
            let cfg = SettleConfig::default();
            let placed = [(&c, at(0.0, 0.0, 0.05)), (&prism, Pose::from_axis_angle(Vector3::z(), 0.4, Vector3::new(0.15, 0.0, 0.04)))];
            let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
                * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), tilt);
            let r = settle(&Pose::new(rot, Vector3::new(x, y, z)), &c, &placed, 0.0, &cfg);
            let proxy = ConvexProxy::new(&c);
            let hulls: Vec<ConvexProxy> = placed.iter().map(|(m, _)| ConvexProxy::new(m)).collect();
            let refs: Vec<(&ConvexProxy, Pose)> = hulls.iter().zip(&placed).map(|(h, (_, p))| (h, *p)).collect();
            if !r.violation {
                let check = check_settled(&r.pose, &proxy, &refs, 0.0);
                prop_assert!(check.satisfied(&cfg), "{:?}", check);
                let again = settle_proxy(&r.pose, &proxy, &refs, 0.0, &cfg);
                prop_assert!((again.pose.translation - r.pose.translation).norm() <= cfg.contact_tolerance);
            }
        }
    }
}
