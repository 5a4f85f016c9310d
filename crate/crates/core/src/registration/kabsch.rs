use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::geometry::Pose;

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`, with a
/// reflection guard. `None` for fewer than 3 pairs or a failed decomposition.
pub fn rigid_fit(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Option<Pose> {
    let n = src.len();
    if n < 3 || dst.len() != n {
        return None;
    }
    let cs = src.iter().sum::<Vector3<f64>>() / n as f64;
    let cd = dst.iter().sum::<Vector3<f64>>() / n as f64;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = Rotation3::from_matrix_unchecked(v * d * u.transpose());
    let t = cd - r * cs;
    let pose = Pose::from_matrix(&r, t);
    pose.is_finite().then_some(pose)
}
