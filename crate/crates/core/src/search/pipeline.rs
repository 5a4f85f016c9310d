//! The constrained expansion step and scene scoring, memoized by hypothesis path.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Pose, SurfaceSamples};
use crate::physics::{settle_proxy, ConvexProxy, SettleConfig};
use crate::registration::{trimmed_icp_indexed, IcpConfig, IcpTarget, ScoredPose};
use crate::render::{render_depth, score_images, CameraModel, DepthImage, Score, ScoreConfig};
use crate::scene::ObjectModel;
use crate::sensing::subtract_explained_with;
use crate::ObjectId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub icp: IcpConfig,
    pub settle: SettleConfig,
    /// Segment points closer than this to a placed surface are removed.
    pub subtract_eps: f64,
    pub score: ScoreConfig,
    /// Below this many camera-facing model points ICP uses the whole cloud.
    pub min_visible_points: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            icp: IcpConfig::default(),
            settle: SettleConfig::default(),
            subtract_eps: 0.005,
            score: ScoreConfig::default(),
            min_visible_points: 12,
        }
    }
}

/// One object to place: its model, registration cloud, segment and hypotheses.
#[derive(Clone, Debug)]
pub struct SearchObject {
    pub id: ObjectId,
    pub model: ObjectModel,
    /// Model-frame samples with outward normals.
    pub samples: SurfaceSamples,
    /// World-frame segment from the detection box.
    pub segment: PointCloud,
    /// Representatives, best LCP first.
    pub hypotheses: Vec<ScoredPose>,
    pub truth: Option<Pose>,
}

/// Everything one search tree needs; objects are in placement order.
#[derive(Clone, Debug)]
pub struct SearchContext {
    pub objects: Vec<SearchObject>,
    pub observed: DepthImage,
    pub camera: CameraModel,
    pub table_z: f64,
    pub params: PipelineParams,
}

impl SearchContext {
    pub fn validate(&self) -> Result<()> {
        if self.objects.is_empty() {
            return Err(Error::InvalidArgument("no objects to place".into()));
        }
        for o in &self.objects {
            if o.hypotheses.is_empty() {
                return Err(Error::NoCandidates);
            }
        }
        if self.observed.dims() != self.camera.dims() {
            return Err(Error::DimensionMismatch { expected: self.camera.dims(), got: self.observed.dims() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub pose: Pose,
    /// Segment points left after subtracting placed objects.
    pub reduced_points: usize,
    pub settle_steps: usize,
    pub settle_violation: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    /// Distinct placements computed (subtract, ICP, settle).
    pub expansions: usize,
    pub expansion_seconds: f64,
    /// Distinct complete scenes rendered and scored.
    pub renders: usize,
    pub render_seconds: f64,
    pub settle_violations: usize,
}

impl PipelineStats {
    /// Mean seconds per placement including its share of rendering.
    pub fn mean_expansion_seconds(&self) -> f64 {
        if self.expansions == 0 {
            return 0.0;
        }
        (self.expansion_seconds + self.render_seconds) / self.expansions as f64
    }
}

/// Memoized expansion pipeline. A placement depends only on the hypothesis
/// choices along its path, so each distinct prefix is computed once.
pub struct Pipeline<'a> {
    pub ctx: &'a SearchContext,
    placements: HashMap<Vec<usize>, Placement>,
    scores: HashMap<Vec<usize>, Score>,
    pub stats: PipelineStats,
}

impl<'a> Pipeline<'a> {
    pub fn new(ctx: &'a SearchContext) -> Result<Self> {
        ctx.validate()?;
        Ok(Self { ctx, placements: HashMap::new(), scores: HashMap::new(), stats: PipelineStats::default() })
    }

    pub fn depth(&self) -> usize {
        self.ctx.objects.len()
    }

    /// Poses of the objects placed along `path`, in order.
    pub fn poses(&mut self, path: &[usize]) -> Vec<Pose> {
        (1..=path.len()).map(|k| self.placement(&path[..k]).pose).collect()
    }

    /// Placement of object `path.len() − 1` given the earlier choices.
    pub fn placement(&mut self, path: &[usize]) -> Placement {
        if let Some(p) = self.placements.get(path) {
            return *p;
        }
        let placed: Vec<Pose> = (1..path.len()).map(|k| self.placement(&path[..k]).pose).collect();
        let d = path.len() - 1;
        let hypothesis = self.ctx.objects[d].hypotheses[path[d]].pose;
        let start = Instant::now();
        let p = place(self.ctx, d, &hypothesis, &placed);
        self.stats.expansions += 1;
        self.stats.expansion_seconds += start.elapsed().as_secs_f64();
        self.stats.settle_violations += p.settle_violation as usize;
        self.placements.insert(path.to_vec(), p);
        p
    }

    /// Render score of the complete scene chosen by `path`.
    pub fn score(&mut self, path: &[usize]) -> Score {
        debug_assert_eq!(path.len(), self.depth());
        if let Some(s) = self.scores.get(path) {
            return *s;
        }
        let poses = self.poses(path);
        let start = Instant::now();
        let s = score_scene(self.ctx, &poses);
        self.stats.renders += 1;
        self.stats.render_seconds += start.elapsed().as_secs_f64();
        self.scores.insert(path.to_vec(), s);
        s
    }
}

pub fn score_scene(ctx: &SearchContext, poses: &[Pose]) -> Score {
    let models: Vec<(&crate::geometry::TriMesh, Pose)> =
        ctx.objects.iter().zip(poses).map(|(o, p)| (o.model.mesh.as_ref(), *p)).collect();
    let rendered = render_depth(&models, &ctx.camera);
    score_images(&rendered, &ctx.observed, &ctx.params.score).expect("dimensions validated")
}

/// Model samples whose normals face the camera at `pose`.
pub fn camera_facing(samples: &SurfaceSamples, pose: &Pose, eye: &nalgebra::Vector3<f64>) -> PointCloud {
    let points = samples
        .cloud
        .points
        .iter()
        .zip(&samples.normals)
        .filter(|(p, n)| pose.transform_vector(n).dot(&(eye - pose.transform_point(p))) > 0.0)
        .map(|(p, _)| *p)
        .collect();
    PointCloud { points }
}

/// Subtract explained points, refine by trimmed ICP, settle.
pub fn place(ctx: &SearchContext, index: usize, hypothesis: &Pose, placed: &[Pose]) -> Placement {
    let obj = &ctx.objects[index];
    let bvhs: Vec<_> = ctx.objects[..placed.len()].iter().zip(placed).map(|(o, p)| (o.model.bvh.as_ref(), *p)).collect();
    let reduced = subtract_explained_with(&obj.segment, &bvhs, ctx.params.subtract_eps);
    let refined = if reduced.is_empty() {
        *hypothesis
    } else {
        let eye = ctx.camera.center();
        let mut model = camera_facing(&obj.samples, hypothesis, &eye);
        if model.len() < ctx.params.min_visible_points {
            model = obj.samples.cloud.clone();
        }
        let target = IcpTarget::new(&reduced);
        let r = trimmed_icp_indexed(hypothesis, &model, &target, &ctx.params.icp);
        if r.pose.is_finite() { r.pose } else { *hypothesis }
    };
    let hulls: Vec<(&ConvexProxy, Pose)> =
        ctx.objects[..placed.len()].iter().zip(placed).map(|(o, p)| (o.model.hull.as_ref(), *p)).collect();
    let s = settle_proxy(&refined, &obj.model.hull, &hulls, ctx.table_z, &ctx.params.settle);
    Placement { pose: s.pose, reduced_points: reduced.len(), settle_steps: s.steps, settle_violation: s.violation }
}
