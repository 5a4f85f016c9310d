//! Synthetic observation: noisy depth capture, imperfect detections, segment
//! extraction and removal of points explained by already placed objects.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MeshBvh, PointCloud, Pose, TriMesh};
use crate::render::{render_depth, render_labeled, CameraModel, DepthImage};
use crate::scene::{ModelLibrary, SceneGroundTruth};
use crate::{par, seeds, ObjectId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthNoiseParams {
    /// Standard deviation of additive Gaussian noise, meters.
    pub sigma: f64,
    /// Probability that a pixel with a return is dropped to 0.
    pub dropout: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionNoiseParams {
    /// Pixels added on every side of the tight box.
    pub margin: i64,
    /// Maximum absolute per-side offset, pixels, drawn uniformly.
    pub jitter: i64,
    /// Fraction of each adjacent object's box swallowed by this object's box.
    pub bleed: f64,
    pub seed: u64,
}

/// Pixel bounding box; `u_max` and `v_max` are exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
}

impl BBox {
    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.u_min <= u && u < self.u_max && self.v_min <= v && v < self.v_max
    }

    pub fn intersects(&self, o: &BBox) -> bool {
        self.u_min < o.u_max && o.u_min < self.u_max && self.v_min < o.v_max && o.v_min < self.v_max
    }

    pub fn area(&self) -> usize {
        (self.u_max - self.u_min) * (self.v_max - self.v_min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object_id: ObjectId,
    pub bbox: BBox,
}

/// Renders the true scene and corrupts it with depth noise and dropout.
pub fn observe(gt: &SceneGroundTruth, lib: &ModelLibrary, noise: &DepthNoiseParams) -> Result<DepthImage> {
    let models = gt.posed_meshes(lib)?;
    let mut img = render_depth(&models, &gt.camera);
    apply_depth_noise(&mut img, noise)?;
    Ok(img)
}

pub fn apply_depth_noise(img: &mut DepthImage, noise: &DepthNoiseParams) -> Result<()> {
    if noise.sigma == 0.0 && noise.dropout == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, noise.sigma.max(0.0))
        .map_err(|e| Error::InvalidArgument(format!("depth noise: {e}")))?;
    let mut rng = seeds::rng(noise.seed);
    for d in img.depth.iter_mut().filter(|d| **d != 0.0) {
        let drop = rng.random::<f64>() < noise.dropout;
        let n = normal.sample(&mut rng);
        *d = if drop { 0.0 } else { (*d + n).max(0.0) };
    }
    Ok(())
}

/// Tight pixel boxes of each object's visible pixels in the noiseless render.
pub fn visible_boxes(gt: &SceneGroundTruth, lib: &ModelLibrary) -> Result<Vec<(ObjectId, Option<BBox>, usize)>> {
    let models = gt.posed_meshes(lib)?;
    let render = render_labeled(&models, &gt.camera);
    let (w, h) = gt.camera.dims();
    let mut out: Vec<(ObjectId, Option<BBox>, usize)> = gt.objects.iter().map(|o| (o.id, None, 0)).collect();
    for v in 0..h {
        for u in 0..w {
            if let Some(l) = render.label(u, v) {
                let entry = &mut out[l as usize];
                entry.2 += 1;
                entry.1 = Some(match entry.1 {
                    None => BBox { u_min: u, v_min: v, u_max: u + 1, v_max: v + 1 },
                    Some(b) => BBox {
                        u_min: b.u_min.min(u),
                        v_min: b.v_min.min(v),
                        u_max: b.u_max.max(u + 1),
                        v_max: b.v_max.max(v + 1),
                    },
                });
            }
        }
    }
    Ok(out)
}

fn dilate(b: &BBox, px: i64) -> (i64, i64, i64, i64) {
    (b.u_min as i64 - px, b.v_min as i64 - px, b.u_max as i64 + px, b.v_max as i64 + px)
}

fn adjacent(a: &BBox, b: &BBox, reach: i64) -> bool {
    let (au0, av0, au1, av1) = dilate(a, reach);
    au0 < b.u_max as i64 && b.u_min as i64 <= au1 && av0 < b.v_max as i64 && b.v_min as i64 <= av1
}

/// Simulated detector: tight visible box, grown by bleed toward adjacent
/// objects, dilated by the margin, jittered per side and clamped to the image.
pub fn simulate_detection(gt: &SceneGroundTruth, lib: &ModelLibrary, noise: &DetectionNoiseParams) -> Result<Vec<Detection>> {
    let boxes = visible_boxes(gt, lib)?;
    let (w, h) = (gt.camera.width as i64, gt.camera.height as i64);
    let mut rng = seeds::rng(noise.seed);
    let reach = noise.margin.max(0) + 3;
    let mut out = Vec::with_capacity(boxes.len());
    for (i, (id, tight, _)) in boxes.iter().enumerate() {
        let tight = tight.ok_or(Error::FullyOccluded(id.0))?;
        let (mut u0, mut v0, mut u1, mut v1) = dilate(&tight, 0);
        if noise.bleed > 0.0 {
            for (j, (_, other, _)) in boxes.iter().enumerate() {
                let Some(o) = other.filter(|o| j != i && adjacent(&tight, o, reach)) else { continue };
                let (ow, oh) = ((o.u_max - o.u_min) as f64, (o.v_max - o.v_min) as f64);
                let (cu, cv) = ((tight.u_min + tight.u_max) as f64, (tight.v_min + tight.v_max) as f64);
                let (ocu, ocv) = ((o.u_min + o.u_max) as f64, (o.v_min + o.v_max) as f64);
                if ocu > cu {
                    u1 = u1.max((o.u_min as f64 + noise.bleed * ow).round() as i64);
                } else {
                    u0 = u0.min((o.u_max as f64 - noise.bleed * ow).round() as i64);
                }
                if ocv > cv {
                    v1 = v1.max((o.v_min as f64 + noise.bleed * oh).round() as i64);
                } else {
                    v0 = v0.min((o.v_max as f64 - noise.bleed * oh).round() as i64);
                }
            }
        }
        u0 -= noise.margin;
        v0 -= noise.margin;
        u1 += noise.margin;
        v1 += noise.margin;
        if noise.jitter > 0 {
            let j = noise.jitter;
            u0 += rng.random_range(-j..=j);
            v0 += rng.random_range(-j..=j);
            u1 += rng.random_range(-j..=j);
            v1 += rng.random_range(-j..=j);
        }
        let u0c = u0.clamp(0, w - 1);
        let v0c = v0.clamp(0, h - 1);
        let bbox = BBox {
            u_min: u0c as usize,
            v_min: v0c as usize,
            u_max: u1.clamp(u0c + 1, w) as usize,
            v_max: v1.clamp(v0c + 1, h) as usize,
        };
        out.push(Detection { object_id: *id, bbox });
    }
    Ok(out)
}

/// Back-projects every nonzero depth pixel inside the box to a world-frame point.
pub fn extract_segment(det: &Detection, observed: &DepthImage, cam: &CameraModel) -> PointCloud {
    let b = det.bbox;
    let mut points = Vec::new();
    for v in b.v_min..b.v_max.min(observed.height) {
        for u in b.u_min..b.u_max.min(observed.width) {
            let d = observed.get(u, v);
            if d != 0.0 {
                points.push(cam.back_project(u as f64, v as f64, d));
            }
        }
    }
    PointCloud::new(points)
}

/// Removes points closer than `eps` to any placed surface. Survivors keep their order.
pub fn subtract_explained_with(segment: &PointCloud, placed: &[(&MeshBvh, Pose)], eps: f64) -> PointCloud {
    if placed.is_empty() {
        return segment.clone();
    }
    let inverse: Vec<(&MeshBvh, Pose)> = placed.iter().map(|(b, p)| (*b, p.inverse())).collect();
    let keep = par::map(&segment.points, |p| {
        !inverse.iter().any(|(bvh, inv)| bvh.within(&inv.transform_point(p), eps))
    });
    PointCloud::new(
        segment
            .points
            .iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(*p))
            .collect(),
    )
}

pub fn subtract_explained<M: AsRef<TriMesh>>(segment: &PointCloud, placed: &[(M, Pose)], eps: f64) -> PointCloud {
    let bvhs: Vec<MeshBvh> = placed.iter().map(|(m, _)| MeshBvh::new(m.as_ref())).collect();
    let refs: Vec<(&MeshBvh, Pose)> = bvhs.iter().zip(placed).map(|(b, (_, p))| (b, *p)).collect();
    subtract_explained_with(segment, &refs, eps)
}
