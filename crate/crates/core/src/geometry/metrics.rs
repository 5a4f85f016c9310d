//! Pose error metrics and symmetry-aware rotation distances.

use nalgebra::UnitQuaternion;

use super::{Pose, SymmetryGroup};

/// Geodesic angle between two rotations, in radians, in `[0, π]`.
#[inline]
pub fn geodesic_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let rel = a.inverse() * b;
    2.0 * rel.imag().norm().atan2(rel.w.abs())
}

/// Minimum geodesic angle between `q1` and `q2 ∘ s` over the symmetry group.
pub fn rotation_distance(q1: &UnitQuaternion<f64>, q2: &UnitQuaternion<f64>, sym: &SymmetryGroup) -> f64 {
    // ⟨q1, q2∘s⟩ = ⟨q2⁻¹q1, s⟩, so the nearest element of the group gives the minimum
    geodesic_angle(q1, &(q2 * sym.nearest(&(q2.inverse() * q1))))
}

/// Mean of absolute intrinsic Z-Y-X Euler angles of a rotation, in degrees.
pub fn mean_abs_euler_deg(r: &UnitQuaternion<f64>) -> f64 {
    let (roll, pitch, yaw) = r.euler_angles();
    (roll.abs() + pitch.abs() + yaw.abs()).to_degrees() / 3.0
}

/// Rotation error in degrees: the smallest mean |roll|, |pitch|, |yaw| of the
/// relative rotation over all symmetric equivalents of the ground truth.
pub fn rotation_error(measured: &Pose, truth: &Pose, sym: &SymmetryGroup) -> f64 {
    sym.rotations()
        .iter()
        .map(|s| {
            let rel = (truth.rotation * s).inverse() * measured.rotation;
            mean_abs_euler_deg(&rel)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance between object centers, in centimeters.
pub fn translation_error(measured: &Pose, truth: &Pose) -> f64 {
    (measured.translation - truth.translation).norm() * 100.0
}
