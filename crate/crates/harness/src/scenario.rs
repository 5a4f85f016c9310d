//! Scenario specs and synthetic scene generation.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use nalgebra::{UnitQuaternion, Vector3};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use scenepose::dependency::{build_dependency_graph, DependencyGraph, EdgeKind};
use scenepose::geometry::Pose;
use scenepose::physics::{settle_proxy, ConvexProxy, SettleConfig};
use scenepose::render::{render_depth, render_labeled, CameraModel, DepthImage};
use scenepose::scene::{ModelLibrary, SceneGroundTruth, SceneObject};
use scenepose::sensing::{extract_segment, observe, simulate_detection, DepthNoiseParams, DetectionNoiseParams, Detection};
use scenepose::{seeds, ObjectId, PointCloud};

use crate::library::{build_library, default_primitives, half_height, PrimitiveSpec};

/// Interaction pattern between the objects of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// No support or occlusion between any pair.
    Independent,
    /// One object resting on another.
    Stack2,
    /// One object partly hiding another.
    Occlusion2,
    /// A two-object stack partly hidden by a third object.
    Three,
}

impl Pattern {
    pub fn level(self) -> Level {
        match self {
            Pattern::Independent => Level::Independent,
            Pattern::Stack2 | Pattern::Occlusion2 => Level::TwoObject,
            Pattern::Three => Level::ThreeObject,
        }
    }

    fn object_count(self, requested: usize) -> usize {
        match self {
            Pattern::Independent => requested.max(1),
            Pattern::Stack2 | Pattern::Occlusion2 => 2,
            Pattern::Three => 3,
        }
    }
}

/// Dependency level used to group results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Independent,
    TwoObject,
    ThreeObject,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Independent => "independent",
            Level::TwoObject => "two_object",
            Level::ThreeObject => "three_object",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub depth_sigma: f64,
    pub dropout: f64,
    pub bbox_margin: i64,
    pub bbox_jitter: i64,
    pub bleed: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { depth_sigma: 0.0, dropout: 0.0, bbox_margin: 2, bbox_jitter: 0, bleed: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub eye: [f64; 3],
    pub target: [f64; 3],
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self { width: 160, height: 120, focal: 200.0, eye: [0.0, -0.4, 0.45], target: [0.0, 0.0, 0.03] }
    }
}

impl CameraSpec {
    pub fn build(&self) -> Result<CameraModel> {
        Ok(CameraModel::look_at(
            self.width,
            self.height,
            self.focal,
            Vector3::from(self.eye),
            Vector3::from(self.target),
            Vector3::z(),
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub name: String,
    pub pattern: Pattern,
    /// Object count for the independent pattern; fixed by the others.
    pub objects: usize,
    /// Model names to draw from; empty means the whole library.
    pub models: Vec<String>,
    pub scenes: usize,
    pub seed: u64,
    pub noise: NoiseSpec,
    pub camera: CameraSpec,
    pub max_retries: usize,
    /// Minimum visible fraction of every object.
    pub min_visibility: f64,
    pub library: Vec<PrimitiveSpec>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            pattern: Pattern::Independent,
            objects: 3,
            models: Vec::new(),
            scenes: 1,
            seed: 0,
            noise: NoiseSpec::default(),
            camera: CameraSpec::default(),
            max_retries: 200,
            min_visibility: 0.05,
            library: default_primitives(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.library.is_empty() {
            bail!("empty model library");
        }
        for m in &self.models {
            if !self.library.iter().any(|p| &p.name == m) {
                bail!("unknown model {m}");
            }
        }
        if self.pattern == Pattern::Independent && self.objects == 0 {
            bail!("independent pattern needs at least one object");
        }
        if !(0.0..=1.0).contains(&self.min_visibility) || !(0.0..1.0).contains(&self.noise.dropout) {
            bail!("fractions must lie in [0, 1)");
        }
        if self.max_retries == 0 {
            bail!("max_retries must be positive");
        }
        Ok(())
    }
}

/// A generated scene with everything needed to reproduce its observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: String,
    pub pattern: Pattern,
    pub level: Level,
    /// Root of the scene's named substreams.
    pub seed: u64,
    pub attempts: usize,
    pub noise: NoiseSpec,
    pub library: Vec<PrimitiveSpec>,
    pub ground_truth: SceneGroundTruth,
}

impl SceneRecord {
    pub fn depth_noise(&self) -> DepthNoiseParams {
        DepthNoiseParams { sigma: self.noise.depth_sigma, dropout: self.noise.dropout, seed: seeds::derive(self.seed, "depth") }
    }

    pub fn detection_noise(&self) -> DetectionNoiseParams {
        DetectionNoiseParams {
            margin: self.noise.bbox_margin,
            jitter: self.noise.bbox_jitter,
            bleed: self.noise.bleed,
            seed: seeds::derive(self.seed, "detection"),
        }
    }

    pub fn stream(&self, name: &str) -> u64 {
        seeds::derive(self.seed, name)
    }

    pub fn library(&self) -> Result<ModelLibrary> {
        build_library(&self.library)
    }
}

/// The sensed view of a scene: noisy depth, detections and segments.
#[derive(Clone, Debug)]
pub struct Observation {
    pub depth: DepthImage,
    pub detections: Vec<Detection>,
    pub segments: BTreeMap<ObjectId, PointCloud>,
}

pub fn observe_scene(rec: &SceneRecord, lib: &ModelLibrary) -> Result<Observation> {
    let gt = &rec.ground_truth;
    let depth = observe(gt, lib, &rec.depth_noise())?;
    let detections = simulate_detection(gt, lib, &rec.detection_noise())?;
    let segments = detections.iter().map(|d| (d.object_id, extract_segment(d, &depth, &gt.camera))).collect();
    Ok(Observation { depth, detections, segments })
}

pub fn dependency_graph(obs: &Observation, cam: &CameraModel) -> Result<DependencyGraph> {
    let dets = obs.detections.iter().map(|d| (d.object_id, *d)).collect();
    Ok(build_dependency_graph(&obs.segments, &dets, cam)?)
}

/// Fraction of each object's pixels visible in the full scene.
pub fn visibility(gt: &SceneGroundTruth, lib: &ModelLibrary) -> Result<Vec<f64>> {
    let models = gt.posed_meshes(lib)?;
    let labeled = render_labeled(&models, &gt.camera);
    let mut visible = vec![0usize; models.len()];
    for l in labeled.labels.iter().flatten() {
        visible[*l as usize] += 1;
    }
    Ok(models
        .iter()
        .zip(visible)
        .map(|(m, v)| {
            let alone = render_depth(std::slice::from_ref(m), &gt.camera).nonzero_count();
            if alone == 0 {
                0.0
            } else {
                v as f64 / alone as f64
            }
        })
        .collect())
}

/// Resting orientations tried by the sampler: upright or on a side.
fn resting_orientation(rng: &mut seeds::Rng, upright_only: bool) -> UnitQuaternion<f64> {
    let yaw = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
    if upright_only || rng.random::<f64>() < 0.6 {
        return yaw;
    }
    let axis = if rng.random::<bool>() { Vector3::x_axis() } else { Vector3::y_axis() };
    yaw * UnitQuaternion::from_axis_angle(&axis, std::f64::consts::FRAC_PI_2)
}

/// Height of the lowest point of the model above its origin in orientation `r`.
fn bottom_offset(lib: &ModelLibrary, name: &str, r: &UnitQuaternion<f64>) -> f64 {
    lib[name].mesh.vertices().iter().map(|v| -(r * v).z).fold(f64::NEG_INFINITY, f64::max)
}

struct Draft {
    model: String,
    pose: Pose,
}

fn draft_scene(spec: &ScenarioSpec, lib: &ModelLibrary, rng: &mut seeds::Rng) -> Vec<Draft> {
    let pool: Vec<String> = if spec.models.is_empty() { lib.keys().cloned().collect() } else { spec.models.clone() };
    let n = spec.pattern.object_count(spec.objects);
    let names: Vec<String> = (0..n).map(|_| pool.choose(rng).expect("non-empty pool").clone()).collect();
    let drop = 0.004;
    let on_table = |name: &str, x: f64, y: f64, r: UnitQuaternion<f64>| Draft {
        model: name.to_owned(),
        pose: Pose::new(r, Vector3::new(x, y, bottom_offset(lib, name, &r) + drop)),
    };
    let jitter = |rng: &mut seeds::Rng, a: f64| rng.random_range(-a..a);
    match spec.pattern {
        Pattern::Independent => names
            .iter()
            .map(|m| {
                let r = resting_orientation(rng, false);
                on_table(m, jitter(rng, 0.14), jitter(rng, 0.09), r)
            })
            .collect(),
        Pattern::Stack2 | Pattern::Three => {
            let (x, y) = (jitter(rng, 0.06), jitter(rng, 0.03) + 0.03);
            let base = on_table(&names[0], x, y, resting_orientation(rng, true));
            let base_top = base.pose.translation.z - drop + half_height(&lib[&names[0]]);
            let r = resting_orientation(rng, true);
            let top = Draft {
                model: names[1].clone(),
                pose: Pose::new(
                    r,
                    Vector3::new(x + jitter(rng, 0.01), y + jitter(rng, 0.01), base_top + bottom_offset(lib, &names[1], &r) + 0.01),
                ),
            };
            let mut out = vec![base, top];
            if spec.pattern == Pattern::Three {
                let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let dx = side * rng.random_range(0.03..0.06);
                let r = resting_orientation(rng, false);
                out.push(on_table(&names[2], x + dx, y - rng.random_range(0.08..0.11), r));
            }
            out
        }
        Pattern::Occlusion2 => {
            let (x, y) = (jitter(rng, 0.06), jitter(rng, 0.03) + 0.04);
            let back = on_table(&names[0], x, y, resting_orientation(rng, false));
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let dx = side * rng.random_range(0.02..0.05);
            let front = on_table(&names[1], x + dx, y - rng.random_range(0.08..0.11), resting_orientation(rng, false));
            vec![back, front]
        }
    }
}

/// Settles the drafted objects in order against the table and each other.
fn settle_all(drafts: &[Draft], lib: &ModelLibrary, table_z: f64) -> Option<Vec<Pose>> {
    let cfg = SettleConfig::default();
    let hulls: Vec<&ConvexProxy> = drafts.iter().map(|d| lib[&d.model].hull.as_ref()).collect();
    let mut placed: Vec<Pose> = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.iter().enumerate() {
        let others: Vec<(&ConvexProxy, Pose)> = hulls[..i].iter().copied().zip(placed.iter().copied()).collect();
        let r = settle_proxy(&d.pose, hulls[i], &others, table_z, &cfg);
        if r.violation {
            return None;
        }
        placed.push(r.pose);
    }
    Some(placed)
}

fn pattern_realized(pattern: Pattern, g: &DependencyGraph, ids: &[ObjectId]) -> bool {
    let support = |a: usize, b: usize| g.has_edge(ids[a], ids[b], EdgeKind::Support) || g.has_edge(ids[b], ids[a], EdgeKind::Support);
    let occludes = |a: usize, b: usize| g.has_edge(ids[a], ids[b], EdgeKind::Occlusion) || g.has_edge(ids[b], ids[a], EdgeKind::Occlusion);
    match pattern {
        Pattern::Independent => g.edges.is_empty(),
        Pattern::Stack2 => support(0, 1),
        Pattern::Occlusion2 => occludes(0, 1) && !support(0, 1),
        Pattern::Three => support(0, 1) && (occludes(2, 0) || occludes(2, 1)) && !support(0, 2) && !support(1, 2),
    }
}

/// Generates scene `index` of the scenario. Drafts poses for the pattern,
/// settles them in order, and retries until every object is visible enough
/// and the dependency graph shows the requested interaction.
pub fn gen_scene(spec: &ScenarioSpec, index: usize) -> Result<SceneRecord> {
    spec.validate()?;
    let lib = build_library(&spec.library)?;
    let camera = spec.camera.build()?;
    let seed = seeds::child(seeds::derive(spec.seed, "scene"), index as u64);
    for attempt in 0..spec.max_retries {
        let mut rng = seeds::rng(seeds::child(seed, attempt as u64));
        let drafts = draft_scene(spec, &lib, &mut rng);
        let Some(poses) = settle_all(&drafts, &lib, 0.0) else { continue };
        let ground_truth = SceneGroundTruth {
            objects: drafts
                .iter()
                .zip(&poses)
                .enumerate()
                .map(|(i, (d, p))| SceneObject { id: ObjectId(i as u32), model: d.model.clone(), pose: *p })
                .collect(),
            camera: camera.clone(),
            table_height: 0.0,
        };
        if visibility(&ground_truth, &lib)?.iter().any(|v| *v < spec.min_visibility) {
            continue;
        }
        let rec = SceneRecord {
            id: format!("{}_{:03}", spec.name, index),
            pattern: spec.pattern,
            level: spec.pattern.level(),
            seed,
            attempts: attempt + 1,
            noise: spec.noise,
            library: spec.library.clone(),
            ground_truth,
        };
        // the pattern is a property of the physical scene, so it is checked on
        // a clean view; the noisy view must still give usable segments
        let clean = SceneRecord { noise: NoiseSpec { bbox_margin: spec.noise.bbox_margin, ..NoiseSpec::default() }, ..rec.clone() };
        let Ok(obs) = observe_scene(&rec, &lib) else { continue };
        if obs.segments.values().any(|s| s.len() < 20) {
            continue;
        }
        let Ok(graph) = observe_scene(&clean, &lib).and_then(|o| dependency_graph(&o, &camera)) else { continue };
        let ids: Vec<ObjectId> = rec.ground_truth.objects.iter().map(|o| o.id).collect();
        if pattern_realized(spec.pattern, &graph, &ids) {
            return Ok(rec);
        }
    }
    bail!("scene {index} of {}: no valid scene after {} attempts", spec.name, spec.max_retries)
}

pub fn gen_scenes(spec: &ScenarioSpec) -> Result<Vec<SceneRecord>> {
    let idx: Vec<usize> = (0..spec.scenes).collect();
    scenepose::par::map(&idx, |&i| gen_scene(spec, i).with_context(|| format!("generating {}", spec.name)))
        .into_iter()
        .collect()
}
