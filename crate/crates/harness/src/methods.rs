//! The compared pose estimation methods, run over shared hypothesis sets.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use scenepose::dependency::DependencyGraph;
use scenepose::geometry::{rotation_error, translation_error, Pose};
use scenepose::physics::{check_settled, ConvexProxy};
use scenepose::registration::{sample_surface, trimmed_icp_indexed, IcpTarget};
use scenepose::render::CameraModel;
use scenepose::scene::ModelLibrary;
use scenepose::search::{
    camera_facing, compute_pose, ObjectInput, PipelineParams, PipelineStats, Policy, RewardMode, SceneInput, SearchConfig, TraceRow,
};
use scenepose::{seeds, ObjectId};

use crate::hypothesize::HypothesisFile;
use crate::scenario::{observe_scene, Level, Observation, SceneRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    /// Best raw candidate by LCP refined by trimmed ICP; no search.
    MaxLcpIcp,
    DepthFirstLcp,
    Mcts,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MaxLcpIcp, Method::DepthFirstLcp, Method::Mcts];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MaxLcpIcp => "max_lcp_icp",
            Method::DepthFirstLcp => "depth_first_lcp",
            Method::Mcts => "mcts",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub expansions: usize,
    pub alpha: f64,
    pub reward_mode: RewardMode,
    pub time_limit: Option<f64>,
    /// Surface samples per model used by ICP during expansion.
    pub surface_points: usize,
    pub params: PipelineParams,
}

impl Default for MethodConfig {
    fn default() -> Self {
        let s = SearchConfig::default();
        Self {
            expansions: s.max_expansions,
            alpha: s.alpha,
            reward_mode: s.reward_mode,
            time_limit: None,
            surface_points: 300,
            params: PipelineParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectResult {
    pub object_id: ObjectId,
    pub pose: Pose,
    pub rotation_deg: f64,
    pub translation_cm: f64,
}

/// Post-conditions of one final pose, re-measured against the objects
/// placed before it in the same component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsCheck {
    pub object_id: ObjectId,
    pub penetration: f64,
    pub support_gap: f64,
    /// The settle step reported it could not meet its tolerances.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub scene_id: String,
    pub level: Level,
    pub method: Method,
    pub seed: u64,
    pub config: MethodConfig,
    pub objects: Vec<ObjectResult>,
    pub trace: Vec<TraceRow>,
    pub stats: PipelineStats,
    pub wall_seconds: f64,
    pub graph: Option<DependencyGraph>,
    /// Placement order per independent component.
    pub components: Vec<Vec<ObjectId>>,
    pub physics: Vec<PhysicsCheck>,
}

impl MethodRun {
    pub fn mean_rotation(&self) -> f64 {
        mean(self.objects.iter().map(|o| o.rotation_deg))
    }

    pub fn mean_translation(&self) -> f64 {
        mean(self.objects.iter().map(|o| o.translation_cm))
    }

    pub fn poses(&self) -> BTreeMap<ObjectId, Pose> {
        self.objects.iter().map(|o| (o.object_id, o.pose)).collect()
    }
}

pub(crate) fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Everything a method needs from one scene, built once and shared.
pub struct Prepared {
    pub lib: ModelLibrary,
    pub obs: Observation,
    pub input: SceneInput,
}

pub fn prepare(rec: &SceneRecord, hyps: &HypothesisFile, cfg: &MethodConfig) -> Result<Prepared> {
    anyhow::ensure!(hyps.scene_id == rec.id, "hypotheses for {} do not belong to scene {}", hyps.scene_id, rec.id);
    let lib = rec.library()?;
    let obs = observe_scene(rec, &lib)?;
    let sample_seed = rec.stream("samples");
    let mut objects = Vec::with_capacity(rec.ground_truth.objects.len());
    for o in &rec.ground_truth.objects {
        let model = lib[&o.model].clone();
        let h = hyps.object(o.id).with_context(|| format!("no hypotheses for object {}", o.id))?;
        let detection = *obs.detections.iter().find(|d| d.object_id == o.id).context("missing detection")?;
        objects.push(ObjectInput {
            id: o.id,
            samples: sample_surface(&model.mesh, cfg.surface_points, seeds::derive(sample_seed, &o.model))?,
            model,
            segment: obs.segments[&o.id].clone(),
            detection,
            hypotheses: h.hypotheses.clone(),
            truth: Some(o.pose),
        });
    }
    let input = SceneInput {
        observed: obs.depth.clone(),
        camera: rec.ground_truth.camera.clone(),
        table_z: rec.ground_truth.table_height,
        objects,
        params: cfg.params,
    };
    Ok(Prepared { lib, obs, input })
}

fn object_result(rec: &SceneRecord, lib: &ModelLibrary, id: ObjectId, pose: Pose) -> Result<ObjectResult> {
    let truth = rec.ground_truth.pose(id).context("unknown object")?;
    let model = rec.ground_truth.model(lib, id)?;
    Ok(ObjectResult {
        object_id: id,
        pose,
        rotation_deg: rotation_error(&pose, &truth, &model.symmetry),
        translation_cm: translation_error(&pose, &truth),
    })
}

fn physics_checks(
    prep: &Prepared,
    components: &[Vec<ObjectId>],
    poses: &BTreeMap<ObjectId, Pose>,
    flagged: &BTreeMap<ObjectId, bool>,
) -> Vec<PhysicsCheck> {
    let hull = |id: ObjectId| -> &ConvexProxy { &prep.input.objects.iter().find(|o| o.id == id).expect("known id").model.hull };
    let mut out = Vec::new();
    for list in components {
        for (i, id) in list.iter().enumerate() {
            let placed: Vec<(&ConvexProxy, Pose)> = list[..i].iter().map(|p| (hull(*p), poses[p])).collect();
            let c = check_settled(&poses[id], hull(*id), &placed, prep.input.table_z);
            out.push(PhysicsCheck { object_id: *id, penetration: c.penetration, support_gap: c.support_gap, flagged: flagged.get(id).copied().unwrap_or(false) });
        }
    }
    out
}

fn baseline(prep: &Prepared, hyps: &HypothesisFile) -> Result<BTreeMap<ObjectId, Pose>> {
    let eye = prep.input.camera.center();
    let mut out = BTreeMap::new();
    for o in &prep.input.objects {
        let init = hyps.object(o.id).context("missing hypotheses")?.max_lcp.pose;
        let target = IcpTarget::new(&o.segment);
        let mut model = camera_facing(&o.samples, &init, &eye);
        if model.len() < prep.input.params.min_visible_points {
            model = o.samples.cloud.clone();
        }
        let r = trimmed_icp_indexed(&init, &model, &target, &prep.input.params.icp);
        out.insert(o.id, r.pose);
    }
    Ok(out)
}

/// Runs one method on a prepared scene.
pub fn run_prepared(rec: &SceneRecord, hyps: &HypothesisFile, prep: &Prepared, method: Method, cfg: &MethodConfig) -> Result<MethodRun> {
    let start = Instant::now();
    let seed = rec.stream("search");
    let (poses, trace, stats, graph, components, flagged) = match method {
        Method::MaxLcpIcp => {
            let poses = baseline(prep, hyps)?;
            let ids = vec![poses.keys().copied().collect()];
            (poses, Vec::new(), PipelineStats::default(), None, ids, BTreeMap::new())
        }
        Method::DepthFirstLcp | Method::Mcts => {
            let policy = if method == Method::Mcts { Policy::Mcts } else { Policy::DepthFirstLcp };
            let scfg = SearchConfig {
                alpha: cfg.alpha,
                max_expansions: cfg.expansions,
                time_limit: cfg.time_limit,
                seed,
                reward_mode: cfg.reward_mode,
            };
            let r = compute_pose(&prep.input, &scfg, policy)?;
            let stats = r.stats();
            let comps = r.components.iter().map(|c| c.objects.clone()).collect();
            let flags = r
                .components
                .iter()
                .flat_map(|c| c.objects.iter().copied().zip(c.outcome.placements.iter().map(|p| p.settle_violation)))
                .collect();
            (r.poses, r.trace, stats, Some(r.graph), comps, flags)
        }
    };
    let objects = poses
        .iter()
        .map(|(id, p)| object_result(rec, &prep.lib, *id, *p))
        .collect::<Result<Vec<_>>>()?;
    // the baseline never settles, so its poses are not physics-checked
    let physics = if method == Method::MaxLcpIcp { Vec::new() } else { physics_checks(prep, &components, &poses, &flagged) };
    Ok(MethodRun {
        scene_id: rec.id.clone(),
        level: rec.level,
        method,
        seed,
        config: *cfg,
        objects,
        trace,
        stats,
        wall_seconds: start.elapsed().as_secs_f64(),
        graph,
        components,
        physics,
    })
}

pub fn run_method(rec: &SceneRecord, hyps: &HypothesisFile, method: Method, cfg: &MethodConfig) -> Result<MethodRun> {
    let prep = prepare(rec, hyps, cfg)?;
    run_prepared(rec, hyps, &prep, method, cfg)
}

/// Ground-truth poses checked the same way as method outputs.
pub fn scene_physics(rec: &SceneRecord, lib: &ModelLibrary) -> Vec<PhysicsCheck> {
    let objs = &rec.ground_truth.objects;
    (0..objs.len())
        .map(|i| {
            let placed: Vec<(&ConvexProxy, Pose)> = objs[..i].iter().map(|o| (lib[&o.model].hull.as_ref(), o.pose)).collect();
            let c = check_settled(&objs[i].pose, &lib[&objs[i].model].hull, &placed, rec.ground_truth.table_height);
            PhysicsCheck { object_id: objs[i].id, penetration: c.penetration, support_gap: c.support_gap, flagged: false }
        })
        .collect()
}

pub fn camera_of(rec: &SceneRecord) -> &CameraModel {
    &rec.ground_truth.camera
}
