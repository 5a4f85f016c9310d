//! Software depth rendering and the depth-agreement score.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, TriMesh};

/// Vertices closer than this to the camera plane drop their triangle.
const NEAR_PLANE: f64 = 1e-3;

/// Pinhole camera. Pixel `(u, v)` has its center at image coordinates `(u, v)`;
/// the camera frame has x right, y down and z along the optical axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Camera-to-world transform.
    pub cam_pose: Pose,
}

impl CameraModel {
    pub fn new(width: usize, height: usize, fx: f64, fy: f64, cx: f64, cy: f64, cam_pose: Pose) -> Result<Self> {
        let cam = Self { width, height, fx, fy, cx, cy, cam_pose };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidArgument("focal lengths must be positive".into()));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64 && 0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::InvalidArgument("principal point outside the image".into()));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`, with `up` giving the world's up direction.
    pub fn look_at(
        width: usize,
        height: usize,
        focal: f64,
        eye: Vector3<f64>,
        target: Vector3<f64>,
        up: Vector3<f64>,
    ) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-9 {
            return Err(Error::InvalidArgument("view direction parallel to up".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[right, down, forward]));
        Self::new(
            width,
            height,
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            Pose::from_matrix(&rot, eye),
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn center(&self) -> Vector3<f64> {
        self.cam_pose.translation
    }

    pub fn world_to_camera(&self) -> Pose {
        self.cam_pose.inverse()
    }

    /// Camera-frame point to image coordinates.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Pixel and camera-frame depth to a world-frame point.
    #[inline]
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let pc = Vector3::new((u - self.cx) * depth / self.fx, (v - self.cy) * depth / self.fy, depth);
        self.cam_pose.transform_point(&pc)
    }
}

/// Row-major depth map in meters; 0 means no return.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl DepthImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, depth: vec![0.0; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth buffer has {} values, expected {}",
                depth.len(),
                width * height
            )));
        }
        if depth.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidArgument("depth values must be finite and non-negative".into()));
        }
        Ok(Self { width, height, depth })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: f64) {
        self.depth[v * self.width + u] = d;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn nonzero_count(&self) -> usize {
        self.depth.iter().filter(|d| **d != 0.0).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub epsilon: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { epsilon: 0.005 }
    }
}

impl ScoreConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(Self { epsilon })
    }
}

/// Depth agreement over the union of nonzero pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub score: usize,
    pub support: usize,
}

impl Score {
    /// `score / support`, or 0 when both images are empty.
    pub fn normalized(&self) -> f64 {
        if self.support == 0 {
            0.0
        } else {
            self.score as f64 / self.support as f64
        }
    }
}

/// Output of the labeled rasterizer: depth plus the index of the model seen at each pixel.
#[derive(Clone, Debug)]
pub struct LabeledRender {
    pub depth: DepthImage,
    pub labels: Vec<Option<u32>>,
}

impl LabeledRender {
    pub fn label(&self, u: usize, v: usize) -> Option<u32> {
        self.labels[v * self.depth.width + u]
    }
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (p.0 - a.0) * (b.1 - a.1) - (p.1 - a.1) * (b.0 - a.0)
}

/// Ownership rule for pixel centers exactly on an edge. Exactly one of `a→b`
/// and `b→a` owns the edge, so shared edges are never drawn twice or skipped.
#[inline]
fn owns_edge(a: (f64, f64), b: (f64, f64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

#[inline]
fn covered(w: f64, owner: bool) -> bool {
    w > 0.0 || (w == 0.0 && owner)
}

fn raster_into<M: AsRef<TriMesh>>(models: &[(M, Pose)], cam: &CameraModel, labels: Option<&mut Vec<Option<u32>>>) -> DepthImage {
    let (w, h) = cam.dims();
    let mut img = DepthImage::zeros(w, h);
    let mut labels = labels;
    let world_to_cam = cam.world_to_camera();
    let mut cam_verts: Vec<Vector3<f64>> = Vec::new();
    let mut screen: Vec<(f64, f64)> = Vec::new();

    for (mi, (mesh, pose)) in models.iter().enumerate() {
        let mesh = mesh.as_ref();
        let to_cam = world_to_cam.compose(pose);
        cam_verts.clear();
        cam_verts.extend(mesh.vertices().iter().map(|v| to_cam.transform_point(v)));
        screen.clear();
        screen.extend(cam_verts.iter().map(|p| cam.project(p)));

        for tri in mesh.triangles() {
            let [i0, i1, i2] = tri.map(|k| k as usize);
            let (z0, z1, z2) = (cam_verts[i0].z, cam_verts[i1].z, cam_verts[i2].z);
            if z0 <= NEAR_PLANE || z1 <= NEAR_PLANE || z2 <= NEAR_PLANE {
                continue;
            }
            let (mut p0, mut p1, p2) = (screen[i0], screen[i1], screen[i2]);
            let (mut iz0, mut iz1, iz2) = (1.0 / z0, 1.0 / z1, 1.0 / z2);
            let mut area = edge(p0, p1, p2);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            if area < 0.0 {
                std::mem::swap(&mut p0, &mut p1);
                std::mem::swap(&mut iz0, &mut iz1);
                area = -area;
            }
            let umin = p0.0.min(p1.0).min(p2.0).ceil().max(0.0);
            let umax = p0.0.max(p1.0).max(p2.0).floor().min(w as f64 - 1.0);
            let vmin = p0.1.min(p1.1).min(p2.1).ceil().max(0.0);
            let vmax = p0.1.max(p1.1).max(p2.1).floor().min(h as f64 - 1.0);
            if umin > umax || vmin > vmax {
                continue;
            }
            let own0 = owns_edge(p1, p2);
            let own1 = owns_edge(p2, p0);
            let own2 = owns_edge(p0, p1);
            for v in vmin as usize..=vmax as usize {
                for u in umin as usize..=umax as usize {
                    let p = (u as f64, v as f64);
                    let w0 = edge(p1, p2, p);
                    let w1 = edge(p2, p0, p);
                    let w2 = edge(p0, p1, p);
                    if !(covered(w0, own0) && covered(w1, own1) && covered(w2, own2)) {
                        continue;
                    }
                    let inv_z = (w0 * iz0 + w1 * iz1 + w2 * iz2) / area;
                    let z = 1.0 / inv_z;
                    let idx = v * w + u;
                    let cur = img.depth[idx];
                    if cur == 0.0 || z < cur {
                        img.depth[idx] = z;
                        if let Some(l) = labels.as_deref_mut() {
                            l[idx] = Some(mi as u32);
                        }
                    }
                }
            }
        }
    }
    img
}

/// Z-buffer rasterization of posed meshes. Back faces are drawn.
pub fn render_depth<M: AsRef<TriMesh>>(models: &[(M, Pose)], cam: &CameraModel) -> DepthImage {
    raster_into(models, cam, None)
}

/// Like [`render_depth`], also recording which model is visible at each pixel.
pub fn render_labeled<M: AsRef<TriMesh>>(models: &[(M, Pose)], cam: &CameraModel) -> LabeledRender {
    let mut labels = vec![None; cam.width * cam.height];
    let depth = raster_into(models, cam, Some(&mut labels));
    LabeledRender { depth, labels }
}

#[inline]
pub fn pixel_match(rendered: f64, observed: f64, cfg: &ScoreConfig) -> bool {
    (rendered - observed).abs() < cfg.epsilon
}

/// Compares two depth images pixel by pixel over the union of their nonzero pixels.
pub fn score_images(rendered: &DepthImage, observed: &DepthImage, cfg: &ScoreConfig) -> Result<Score> {
    if rendered.dims() != observed.dims() {
        return Err(Error::DimensionMismatch { expected: observed.dims(), got: rendered.dims() });
    }
    let mut s = Score::default();
    for (&r, &d) in rendered.depth.iter().zip(&observed.depth) {
        if r != 0.0 || d != 0.0 {
            s.support += 1;
            if pixel_match(r, d, cfg) {
                s.score += 1;
            }
        }
    }
    Ok(s)
}

pub fn render_score<M: AsRef<TriMesh>>(
    observed: &DepthImage,
    hypothesis: &[(M, Pose)],
    cam: &CameraModel,
    cfg: &ScoreConfig,
) -> Result<Score> {
    if observed.dims() != cam.dims() {
        return Err(Error::DimensionMismatch { expected: cam.dims(), got: observed.dims() });
    }
    let rendered = render_depth(hypothesis, cam);
    score_images(&rendered, observed, cfg)
}
