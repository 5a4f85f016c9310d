use nalgebra::{Quaternion, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::PointCloud;

/// Rigid transform mapping model coordinates into a parent frame: `x ↦ R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

/// Wire form: quaternion as `[w, x, y, z]`, translation in meters.
#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl From<PoseRepr> for Pose {
    fn from(r: PoseRepr) -> Self {
        let [w, x, y, z] = r.rotation;
        Pose {
            rotation: UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
            translation: Vector3::from(r.translation),
        }
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRepr {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    pub fn from_rotation(r: UnitQuaternion<f64>) -> Self {
        Self::new(r, Vector3::zeros())
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        Self::new(
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
            translation,
        )
    }

    pub fn from_matrix(rotation: &Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::from_rotation_matrix(rotation), translation)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let mut rotation = self.rotation * other.rotation;
        rotation.renormalize();
        Pose {
            rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn rotation_matrix(&self) -> Rotation3<f64> {
        self.rotation.to_rotation_matrix()
    }

    /// Geodesic rotation angle plus translation norm; used as a convergence measure.
    pub fn magnitude(&self) -> (f64, f64) {
        (self.rotation.angle(), self.translation.norm())
    }

    pub fn is_finite(&self) -> bool {
        let q = self.rotation.quaternion();
        q.coords.iter().all(|c| c.is_finite()) && self.translation.iter().all(|c| c.is_finite())
    }
}

pub fn pose_compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn transform_points(pose: &Pose, cloud: &PointCloud) -> PointCloud {
    PointCloud::new(cloud.points.iter().map(|p| pose.transform_point(p)).collect())
}
