#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{UnitQuaternion, Vector3};
use scenepose::clustering::{HypothesisSet, Provenance};
use scenepose::geometry::{Pose, SymmetryGroup, TriMesh};
use scenepose::registration::{sample_surface, ScoredPose};
use scenepose::render::CameraModel;
use scenepose::scene::{ModelLibrary, ObjectModel, SceneGroundTruth, SceneObject};
use scenepose::search::{ObjectInput, PipelineParams, SceneInput, SearchContext, SearchObject};
use scenepose::sensing::{extract_segment, observe, simulate_detection, DepthNoiseParams, DetectionNoiseParams};
use scenepose::ObjectId;

pub fn camera() -> CameraModel {
    CameraModel::look_at(160, 120, 200.0, Vector3::new(0.0, -0.4, 0.45), Vector3::new(0.0, 0.0, 0.03), Vector3::z()).unwrap()
}

pub fn library() -> ModelLibrary {
    let mut lib = ModelLibrary::new();
    lib.insert(
        "box".into(),
        ObjectModel::new("box", TriMesh::cuboid(0.08, 0.05, 0.04).unwrap(), SymmetryGroup::dihedral(Vector3::z(), 2)),
    );
    lib.insert("cube".into(), ObjectModel::new("cube", TriMesh::cuboid(0.05, 0.05, 0.05).unwrap(), SymmetryGroup::cube()));
    lib
}

pub fn yaw(deg: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), deg.to_radians())
}

/// Objects as (model, x, y, z, yaw in degrees).
pub fn scene(objs: &[(&str, f64, f64, f64, f64)]) -> SceneGroundTruth {
    SceneGroundTruth {
        objects: objs
            .iter()
            .enumerate()
            .map(|(i, (m, x, y, z, a))| SceneObject {
                id: ObjectId(i as u32),
                model: (*m).into(),
                pose: Pose::new(yaw(*a), Vector3::new(*x, *y, *z)),
            })
            .collect(),
        camera: camera(),
        table_height: 0.0,
    }
}

/// Hypotheses per object: the truth at `truth_index` among decoys rotated and
/// shifted by growing amounts. Sorted by the given LCP values.
pub fn hypotheses(truth: &Pose, n: usize, truth_index: usize) -> Vec<ScoredPose> {
    (0..n)
        .map(|i| {
            let lcp = 1.0 - i as f64 * 0.01;
            if i == truth_index {
                return ScoredPose { pose: *truth, lcp };
            }
            let k = (i + 1) as f64;
            let delta = Pose::new(yaw(17.0 * k), Vector3::new(0.004 * k, -0.003 * k, 0.0));
            ScoredPose { pose: Pose::new(delta.rotation * truth.rotation, truth.translation + delta.translation), lcp }
        })
        .collect()
}

pub fn detection_noise(bleed: f64) -> DetectionNoiseParams {
    DetectionNoiseParams { margin: 2, jitter: 0, bleed, seed: 3 }
}

pub fn scene_input(gt: &SceneGroundTruth, lib: &ModelLibrary, hyps: &[Vec<ScoredPose>], bleed: f64) -> SceneInput {
    let observed = observe(gt, lib, &DepthNoiseParams::default()).unwrap();
    let dets = simulate_detection(gt, lib, &detection_noise(bleed)).unwrap();
    let objects = gt
        .objects
        .iter()
        .zip(hyps)
        .map(|(o, h)| {
            let model = lib[&o.model].clone();
            let det = *dets.iter().find(|d| d.object_id == o.id).unwrap();
            ObjectInput {
                id: o.id,
                samples: sample_surface(&model.mesh, 300, 11 + o.id.0 as u64).unwrap(),
                model,
                segment: extract_segment(&det, &observed, &gt.camera),
                detection: det,
                hypotheses: HypothesisSet {
                    object_id: o.id,
                    representatives: h.clone(),
                    provenance: (0..h.len()).map(|i| Provenance { source: i, members: 1, max_rotation_distance: 0.0 }).collect(),
                },
                truth: Some(o.pose),
            }
        })
        .collect();
    SceneInput { observed, camera: gt.camera.clone(), table_z: gt.table_height, objects, params: PipelineParams::default() }
}

/// Single search context over all objects in listing order.
pub fn context(input: &SceneInput) -> SearchContext {
    SearchContext {
        objects: input
            .objects
            .iter()
            .map(|o| SearchObject {
                id: o.id,
                model: o.model.clone(),
                samples: o.samples.clone(),
                segment: o.segment.clone(),
                hypotheses: o.hypotheses.representatives.clone(),
                truth: o.truth,
            })
            .collect(),
        observed: input.observed.clone(),
        camera: input.camera.clone(),
        table_z: input.table_z,
        params: input.params,
    }
}

pub fn ids(input: &SceneInput) -> BTreeMap<ObjectId, usize> {
    input.objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect()
}
